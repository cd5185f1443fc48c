"""Settling-time measurement on recorded channels."""
from __future__ import annotations

import numpy as np


def settling_time(traj, channel="omega_err", band=0.05, values=None):
    """Earliest recorded time after which ``|channel| <= band`` up to the end.

    ``traj`` is a :class:`~gridpll.dynamics.Trajectory` (or anything with ``times``);
    pass ``values`` to measure an explicit array instead of a named channel.  Returns
    ``None`` if the channel is outside the band at the final sample.
    """
    if not band > 0:
        raise ValueError("band must be positive")
    times = np.asarray(traj.times if hasattr(traj, "times") else traj, dtype=float)
    x = np.asarray(traj.channel(channel) if values is None else values, dtype=float)
    out = np.abs(x) > band
    if x.ndim > 1:
        out = np.any(out.reshape(out.shape[0], -1), axis=1)
    idx = np.flatnonzero(out)
    if idx.size == 0:
        return float(times[0])
    if idx[-1] == times.size - 1:
        return None
    return float(times[idx[-1] + 1])
