"""Fixed-step RK4 integration and closed-loop PLL simulation.

States are stored component-first: a single trajectory has shape ``(dim,)``, a
batch of independent initial conditions has shape ``(dim, n)``.  Every vector
field in :mod:`gridpll.pll` broadcasts over the trailing axis, so a batch is
integrated with the same number of Python-level operations as a single run.
Single trajectories are stepped on plain floats, which is several times faster
than numpy for two or three components.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from .errors import IntegrationDivergedError
from .pll import (PllConfig, PllState, dq_from_delta, passive_output, passive_output_fn, polar_output,
                  polar_output_fn)
from .signals import GridModel, wrap_angle

log = logging.getLogger(__name__)

REPRESENTATIONS = ("polar", "dq")
_TIME_TOL = 1e-9


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float = 1e-5
    t_end: float = 1.0
    method: str = "RK4"
    record_stride: int = 1

    def __post_init__(self):
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ValueError("dt must be positive")
        if not (math.isfinite(self.t_end) and self.t_end > 0):
            raise ValueError("t_end must be positive")
        if self.method.upper() != "RK4":
            raise ValueError(f"unsupported method {self.method!r}; only RK4 is available")
        if int(self.record_stride) != self.record_stride or self.record_stride < 1:
            raise ValueError("record_stride must be a positive integer")


@dataclass(frozen=True)
class Event:
    """State map applied at ``time``; ``jump`` is informational (phase-step size)."""

    time: float
    apply: Callable[[np.ndarray], np.ndarray]
    jump: float = 0.0


@dataclass(frozen=True)
class EventRecord:
    time: float
    jump: float
    state_before: np.ndarray
    state_after: np.ndarray
    extra_sample: bool


@dataclass
class Trajectory:
    """Recorded solution.

    ``times`` has shape ``(n_t,)``; ``states`` has shape ``(n_t, dim, *batch)``.  The
    closed-loop channels (``delta``, ``omega_hat``, ...) have shape ``(n_t, *batch)`` and
    are only filled by :func:`simulate_closed_loop`.
    """

    times: np.ndarray
    states: np.ndarray
    events: List[EventRecord] = field(default_factory=list)
    representation: str = "generic"
    delta: Optional[np.ndarray] = None
    omega_hat: Optional[np.ndarray] = None
    omega: Optional[np.ndarray] = None
    u_hat: Optional[np.ndarray] = None
    y_tilde: Optional[np.ndarray] = None
    energies: Dict[str, np.ndarray] = field(default_factory=dict)
    renormalizations: int = 0
    end_time: float = 0.0
    end_state: Optional[np.ndarray] = None
    end_delta: Optional[np.ndarray] = None
    end_omega_hat: Optional[np.ndarray] = None

    def __len__(self):
        return self.times.shape[0]

    @property
    def omega_error(self):
        return self.omega_hat - self.omega

    @property
    def final(self):
        return self.states[-1]

    def channel(self, name):
        if name == "delta":
            return self.delta
        if name == "omega_err":
            return self.omega_error
        if name in self.energies:
            return self.energies[name]
        return getattr(self, name)


# --------------------------------------------------------------------------- integrator


def rk4_step(rhs, t, x, h):
    """One classical RK4 step; ``rhs`` may return an array or a sequence of components."""
    k1 = np.asarray(rhs(t, x))
    k2 = np.asarray(rhs(t + 0.5 * h, x + (0.5 * h) * k1))
    k3 = np.asarray(rhs(t + 0.5 * h, x + (0.5 * h) * k2))
    k4 = np.asarray(rhs(t + h, x + h * k3))
    return x + (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)


def _rk4_step_floats(rhs, t, x, h):
    h2 = 0.5 * h
    k1 = rhs(t, x)
    k2 = rhs(t + h2, [a + h2 * b for a, b in zip(x, k1)])
    k3 = rhs(t + h2, [a + h2 * b for a, b in zip(x, k2)])
    k4 = rhs(t + h, [a + h * b for a, b in zip(x, k3)])
    h6 = h / 6.0
    return [a + h6 * (b1 + 2.0 * (b2 + b3) + b4) for a, b1, b2, b3, b4 in zip(x, k1, k2, k3, k4)]


def integrate(rhs, x0, cfg: IntegratorConfig, events: Sequence[Event] = (), post_step=None,
              floats=False) -> Trajectory:
    """Integrate ``dx/dt = rhs(t, x)`` from ``t = 0`` to ``cfg.t_end`` with classical RK4.

    Steps land on ``k * dt``; the last step is shortened to end exactly on ``t_end`` and
    a step containing an event time is split so that the event is applied at its exact
    time.  Samples are kept at ``t = 0``, at every ``record_stride``-th grid point up to
    ``t_end`` and at each event time that falls between grid points (after the event is
    applied), i.e. ``floor(t_end/(dt*record_stride)) + 1`` rows plus one per off-grid
    event.  The state at ``t_end`` itself is always available as ``end_state``.

    Parameters
    ----------
    rhs : callable
        ``rhs(t, x) -> dx/dt`` with the same shape as ``x``.
    x0 : array_like
        Initial state.
    cfg : IntegratorConfig
    events : sequence of Event
        Discontinuities, applied in time order.
    post_step : callable, optional
        ``post_step(t, x) -> x`` applied after every completed step.
    floats : bool
        Step a single (1-D) state on Python floats.  ``rhs`` then receives a list and
        must return a sequence of components.

    Raises
    ------
    IntegrationDivergedError
        If the state becomes non-finite.
    """
    dt, t_end, stride = cfg.dt, cfg.t_end, int(cfg.record_stride)
    x = np.array(x0, dtype=float)
    scalar = floats and x.ndim == 1
    n_grid = int(math.floor(t_end / dt + _TIME_TOL))
    partial = t_end - n_grid * dt > _TIME_TOL * dt
    n_total = n_grid + 1 if partial else n_grid

    pending = sorted((e for e in events if e.time <= t_end + _TIME_TOL * dt), key=lambda e: e.time)
    if pending and pending[0].time < 0:
        raise ValueError("event times must be >= 0")
    log_: List[EventRecord] = []
    ev = 0

    def fire(x, t, extra):
        nonlocal ev
        e = pending[ev]
        before = np.array(x, dtype=float)
        after = np.array(e.apply(before.copy()), dtype=float)
        log_.append(EventRecord(t, e.jump, before, after, extra))
        ev += 1
        return [float(v) for v in after] if scalar else after

    advance = _advance_floats if scalar else _advance
    if scalar:
        x = [float(v) for v in x]
    while ev < len(pending) and pending[ev].time <= _TIME_TOL * dt:
        x = fire(x, 0.0, False)
    times = [0.0]
    states = [x]
    t = 0.0
    for k in range(1, n_total + 1):
        t_next = t_end if k == n_total else k * dt
        while ev < len(pending) and pending[ev].time < t_next - _TIME_TOL * dt:
            ts = pending[ev].time
            x = advance(rhs, t, x, ts - t, post_step)
            t = ts
            x = fire(x, t, True)
            times.append(t)
            states.append(x)
        x = advance(rhs, t, x, t_next - t, post_step)
        t = t_next
        while ev < len(pending) and abs(pending[ev].time - t) <= _TIME_TOL * dt:
            x = fire(x, t, False)
        if k % stride == 0 and k <= n_grid:
            times.append(t)
            states.append(x)
    return Trajectory(np.array(times), np.array(states, dtype=float), log_, end_time=t,
                      end_state=np.array(x, dtype=float))


def _advance(rhs, t, x, h, post_step):
    with np.errstate(over="ignore", invalid="ignore"):
        x_new = rk4_step(rhs, t, x, h)
    if not np.all(np.isfinite(x_new)):
        raise IntegrationDivergedError(t)
    if post_step is not None:
        x_new = post_step(t + h, x_new)
    return x_new


def _advance_floats(rhs, t, x, h, post_step):
    try:
        x_new = _rk4_step_floats(rhs, t, x, h)
    except OverflowError:
        raise IntegrationDivergedError(t) from None
    for v in x_new:
        if not math.isfinite(v):
            raise IntegrationDivergedError(t)
    if post_step is not None:
        x_new = post_step(t + h, x_new)
    return x_new


# --------------------------------------------------------------------------- closed loop


def _polar_field(grid: GridModel, cfg: PllConfig):
    kp, ki, g, phi = cfg.kp, cfg.ki, cfg.output_gain, cfg.phi
    omega = grid.omega
    output = polar_output_fn(cfg)

    def rhs(t, x):
        y = g * output(x[0])
        return (-kp * phi(y) + x[1] - omega(t), -ki * y)

    return rhs


def _dq_field(grid: GridModel, cfg: PllConfig):
    kp, ki, g, phi = cfg.kp, cfg.ki, cfg.output_gain, cfg.phi
    omega = grid.omega
    output = passive_output_fn(cfg)

    def rhs(t, x):
        y = g * output(x)
        u_tilde = -kp * phi(y) + x[2] - omega(t)
        return (-u_tilde * x[1], u_tilde * x[0], -ki * y)

    return rhs


def _initial_error(grid: GridModel, x0: PllState):
    delta0 = np.asarray(x0.theta_hat, dtype=float) - grid.theta(0.0)
    omega_hat0 = np.asarray(x0.omega_hat, dtype=float)
    delta0, omega_hat0 = np.broadcast_arrays(delta0, omega_hat0)
    return delta0.astype(float), omega_hat0.astype(float)


def error_state(grid: GridModel, delta, omega_hat) -> PllState:
    """Estimator state whose angle error at ``t = 0`` is ``delta``."""
    return PllState(np.asarray(delta, dtype=float) + grid.theta(0.0), omega_hat)


def simulate_closed_loop(grid: GridModel, cfg: PllConfig, representation: str, icfg: IntegratorConfig,
                         x0: PllState, renormalize: bool = True) -> Trajectory:
    """Simulate the PLL against the grid in ``"polar"`` or ``"dq"`` coordinates.

    ``x0`` holds the estimator angle and frequency; arrays of equal shape run as a
    batch.  The returned trajectory carries the angle error, frequency estimate,
    command ``u_hat``, raw passive output and the matched storage/Lyapunov values
    (``H1``/``W1`` for gSRF, ``H2``/``W2`` for gATAN).

    In dq coordinates the norm of ``v_hat`` is reset to ``gamma*V`` after a step when it
    drifts by more than ``1e-9*gamma*V`` (unless ``renormalize`` is false).
    """
    if representation not in REPRESENTATIONS:
        raise ValueError(f"representation must be one of {REPRESENTATIONS}")
    if abs(grid.V - cfg.amplitude) > 1e-12 * grid.V:
        raise ValueError("PLL amplitude does not match the grid amplitude")
    delta0, omega_hat0 = _initial_error(grid, x0)
    gv = cfg.gamma_v

    if representation == "polar":
        rhs = _polar_field(grid, cfg)
        state0 = np.array([delta0, omega_hat0])
        events = [Event(t, lambda x, j=j: np.array([x[0] - j, x[1]]), j) for t, j in grid.phase_steps]
        post = None
    else:
        rhs = _dq_field(grid, cfg)
        v0 = dq_from_delta(cfg, delta0)
        state0 = np.array([v0[0], v0[1], omega_hat0])
        events = [Event(t, lambda x, j=j: _rotate(x, -j), j) for t, j in grid.phase_steps]
        post = None
        count = [0]
        if renormalize:
            def post(t, x):
                if isinstance(x, list):
                    norm = math.hypot(x[0], x[1])
                    if abs(norm - gv) > 1e-9 * gv:
                        count[0] += 1
                        log.debug("renormalising |v_hat| at t=%.9g (drift %.3g)", t, norm - gv)
                        x = [x[0] * gv / norm, x[1] * gv / norm, x[2]]
                    return x
                norm = np.hypot(x[0], x[1])
                drift = np.abs(norm - gv) > 1e-9 * gv
                if np.any(drift):
                    count[0] += 1
                    log.debug("renormalising |v_hat| at t=%.9g (max drift %.3g)", t, np.max(np.abs(norm - gv)))
                    scale = np.where(drift, gv / norm, 1.0)
                    x = np.array([x[0] * scale, x[1] * scale, x[2]])
                return x

    traj = integrate(rhs, state0, icfg, events, post, floats=True)
    traj.representation = representation
    if representation == "dq" and renormalize:
        traj.renormalizations = count[0]
        if count[0]:
            log.info("dq simulation renormalised |v_hat| on %d steps", count[0])
    _fill_channels(traj, grid, cfg, delta0)
    return traj


def _rotate(x, angle):
    c, s = math.cos(angle), math.sin(angle)
    return np.array([c * x[0] - s * x[1], s * x[0] + c * x[1], x[2]])


def _fill_channels(traj: Trajectory, grid: GridModel, cfg: PllConfig, delta0):
    S = traj.states
    batch_shape = S.shape[2:]
    times = traj.times.reshape((-1,) + (1,) * len(batch_shape))
    omega = np.broadcast_to(grid.omega(times), (S.shape[0],) + batch_shape)
    if traj.representation == "polar":
        delta = S[:, 0]
        omega_hat = S[:, 1]
        v = dq_from_delta(cfg, delta)
        y_raw = polar_output(cfg, delta)
    else:
        v = np.stack([S[:, 0], S[:, 1]])
        omega_hat = S[:, 2]
        angle = np.unwrap(np.arctan2(v[1], v[0]), axis=0)
        turns = np.rint((np.asarray(delta0) - angle[0]) / (2 * math.pi))
        delta = angle + 2 * math.pi * turns
        y_raw = passive_output(cfg, v)
    y = cfg.output_gain * y_raw
    end = traj.end_state
    if traj.representation == "polar":
        traj.end_delta, traj.end_omega_hat = end[0], end[1]
    else:
        # unwrap the final angle against the last recorded sample
        last = delta[-1]
        traj.end_delta = last + wrap_angle(np.arctan2(end[1], end[0]) - last)
        traj.end_omega_hat = end[2]
    traj.delta = delta
    traj.omega_hat = omega_hat
    traj.omega = np.array(omega)
    traj.y_tilde = y_raw
    traj.u_hat = -cfg.kp * cfg.phi(y) + omega_hat
    ref = np.asarray(cfg.reference).reshape((2,) + (1,) * (v.ndim - 1))
    if cfg.is_srf:
        storage = 0.5 * np.sum((v - ref) ** 2, axis=0)
        names = ("H1", "W1")
    else:
        storage = 0.5 * y_raw**2
        names = ("H2", "W2")
    traj.energies = {
        names[0]: storage,
        names[1]: cfg.output_gain * storage + (omega_hat - omega) ** 2 / (2.0 * cfg.ki),
    }


def representation_equivalence(grid: GridModel, cfg: PllConfig, icfg: IntegratorConfig, x0: PllState):
    """Largest angle and frequency mismatch between polar and dq simulations.

    Returns ``(max |wrap(delta_polar - angle(v_hat))|, max |omega_hat_polar - omega_hat_dq|)``.
    """
    polar = simulate_closed_loop(grid, cfg, "polar", icfg, x0)
    dq = simulate_closed_loop(grid, cfg, "dq", icfg, x0)
    angle = np.arctan2(dq.states[:, 1], dq.states[:, 0])
    d_angle = np.max(np.abs(wrap_angle(polar.delta - angle)))
    d_omega = np.max(np.abs(polar.omega_hat - dq.omega_hat))
    return float(d_angle), float(d_omega)
