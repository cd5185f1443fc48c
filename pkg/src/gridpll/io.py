"""CSV and JSON writers with a fixed, round-trip exact number format."""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

CSV_HEADER = ("t", "delta", "omega_hat", "u_hat", "y_tilde", "energy")


def trajectory_table(traj, cfg, member=None):
    """``(n_t, 6)`` array of the CSV columns; ``member`` picks one run of a batch."""
    energy = traj.energies["W1" if cfg.is_srf else "W2"]
    cols = [traj.delta, traj.omega_hat, traj.u_hat, traj.y_tilde, energy]
    if member is not None:
        cols = [c[:, member] for c in cols]
    return np.column_stack([traj.times] + cols)


def write_trajectory_csv(path, traj, cfg, member=None):
    """Write one trajectory with 17 significant digits per value."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    table = trajectory_table(traj, cfg, member)
    with open(path, "w", newline="") as fh:
        fh.write(",".join(CSV_HEADER) + "\n")
        np.savetxt(fh, table, fmt="%.17g", delimiter=",")
    return path


def read_trajectory_csv(path):
    """Return ``(header, table)``."""
    with open(path) as fh:
        header = tuple(fh.readline().strip().split(","))
        table = np.loadtxt(fh, delimiter=",", ndmin=2)
    return header, table


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path, payload):
    """Write ``payload`` as indented JSON; non-finite floats become strings."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(_clean(payload), fh, indent=2)
        fh.write("\n")
    return path
