"""Storage and Lyapunov functions, the passivity balance and monotonicity checks."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import DomainError
from ..pll import PllConfig
from ..signals import GAMMA, NOMINAL_OMEGA, wrap_angle

_KINDS = ("H1", "H2", "W1", "W2", "W1h", "W2h", "W2eps")


@dataclass(frozen=True)
class EnergyKind:
    """Which function to evaluate.

    ``h`` (even) selects the equilibrium for ``W1h``/``W2h``; ``eps`` parametrises ``W2eps``.
    Use the class-level constructors, e.g. ``EnergyKind.W2h(2)``.
    """

    name: str
    h: int = 0
    eps: Optional[float] = None

    def __post_init__(self):
        if self.name not in _KINDS:
            raise ValueError(f"unknown energy kind {self.name!r}")
        if self.h % 2:
            raise ValueError("h must be even")
        if self.name == "W2eps" and not (self.eps is not None and math.isfinite(self.eps) and self.eps > 0):
            raise ValueError("W2eps needs a finite eps > 0")

    @property
    def polar(self):
        return self.name in ("W1h", "W2h", "W2eps")

    @classmethod
    def W1h(cls, h=0):
        return cls("W1h", h=h)

    @classmethod
    def W2h(cls, h=0):
        return cls("W2h", h=h)

    @classmethod
    def W2eps(cls, eps):
        return cls("W2eps", eps=eps)


# the parameter-free kinds are plain class attributes: EnergyKind.H1, ...
for _name in ("H1", "H2", "W1", "W2"):
    setattr(EnergyKind, _name, EnergyKind(_name))


@dataclass(frozen=True)
class EnergyParams:
    """Constants entering the energy functions.

    ``output_gain`` weights the storage term of ``W1``/``W2``; with the conventional
    SRF-PLL (gain ``1/(gamma V)``) this makes ``W1`` the function that decreases along
    the closed loop, and it reduces to ``H1 + omega_tilde^2/(2 ki)`` for unit gain.
    """

    gamma_v: float = GAMMA
    ki: float = 1.0
    omega: float = NOMINAL_OMEGA
    reference: Optional[tuple] = None
    output_gain: float = 1.0

    @classmethod
    def from_config(cls, cfg: PllConfig, omega=NOMINAL_OMEGA):
        return cls(cfg.gamma_v, cfg.ki, omega, tuple(cfg.reference), cfg.output_gain)

    @property
    def ref(self):
        return (self.gamma_v, 0.0) if self.reference is None else self.reference


def energy_eval(kind: EnergyKind, point, params: EnergyParams):
    """Evaluate a storage or Lyapunov function.

    Parameters
    ----------
    kind : EnergyKind
    point : sequence
        ``(V_d, V_q)`` for ``H1``/``H2``, ``(V_d, V_q, omega_hat)`` for ``W1``/``W2`` and
        ``(delta, omega_hat)`` for the polar kinds.  Components may be arrays.
    params : EnergyParams

    Raises
    ------
    DomainError
        ``W2eps`` outside ``-pi < delta < pi``.
    """
    name = kind.name
    ki = params.ki
    if kind.polar:
        delta = np.asarray(point[0], dtype=float)
        w = np.asarray(point[1], dtype=float) - params.omega
        if name == "W1h":
            out = params.gamma_v * (1.0 - np.cos(delta - kind.h * math.pi)) + w**2 / (2 * ki)
        elif name == "W2h":
            out = 0.5 * (delta - kind.h * math.pi) ** 2 + w**2 / (2 * ki)
        else:
            if np.any(np.abs(delta) >= math.pi):
                raise DomainError("W2eps is only defined for -pi < delta < pi")
            out = 0.5 * delta**2 + w**2 / (2 * ki) - kind.eps * delta * w / ki
        return float(out) if out.ndim == 0 else out

    vd = np.asarray(point[0], dtype=float)
    vq = np.asarray(point[1], dtype=float)
    rd, rq = params.ref
    if name in ("H1", "W1"):
        storage = 0.5 * ((vd - rd) ** 2 + (vq - rq) ** 2)
    else:
        if np.any((vd == 0) & (vq == 0)):
            raise DomainError("H2 is undefined at the origin")
        storage = 0.5 * wrap_angle(np.arctan2(vq, vd) - math.atan2(rq, rd)) ** 2
    if name in ("W1", "W2"):
        w = np.asarray(point[2], dtype=float) - params.omega
        storage = params.output_gain * storage + w**2 / (2 * ki)
    storage = np.asarray(storage)
    return float(storage) if storage.ndim == 0 else storage


def _trapezoid(f, t):
    dt = np.diff(t).reshape((-1,) + (1,) * (f.ndim - 1))
    return np.sum(0.5 * dt * (f[1:] + f[:-1]), axis=0)


def _simpson(f, t):
    """Composite Simpson rule for possibly uneven sample spacing."""
    n = t.size - 1
    if n < 2:
        return _trapezoid(f, t)
    shape = (-1,) + (1,) * (f.ndim - 1)
    h = np.diff(t)
    m = n - n % 2
    h0, h1 = h[0:m:2].reshape(shape), h[1:m:2].reshape(shape)
    f0, f1, f2 = f[0:m:2], f[1:m + 1:2], f[2:m + 1:2]
    total = np.sum((h0 + h1) / 6.0 * ((2.0 - h1 / h0) * f0 + (h0 + h1) ** 2 / (h0 * h1) * f1
                                      + (2.0 - h0 / h1) * f2), axis=0)
    if n % 2:
        # last interval from the quadratic through the final three samples
        a, b = h[-2], h[-1]
        total = total + (f[-1] * (2 * b * b + 3 * a * b) / (6 * (a + b))
                         + f[-2] * (b * b + 3 * a * b) / (6 * a)
                         - f[-3] * b**3 / (6 * a * (a + b)))
    return total


def passivity_residual(traj, kind="H1", quadrature="simpson"):
    """``|H(t_end) - H(t_0) - int y_tilde*(u_hat - omega) dt|`` over a recorded trajectory.

    ``traj`` must come from :func:`gridpll.dynamics.simulate_closed_loop` with the
    storage ``kind`` (``"H1"`` or ``"H2"``) recorded and no phase steps.  The supply
    integral uses composite Simpson (default) or the trapezoidal rule on the recorded
    samples; the trapezoidal error is ``O(dt^2)`` and dominates the residual when the
    supply rate has fast transients.  Batched trajectories give one residual per member.
    """
    if kind not in traj.energies:
        raise ValueError(f"trajectory does not record {kind}")
    rules = {"simpson": _simpson, "trapezoid": _trapezoid}
    if quadrature not in rules:
        raise ValueError(f"quadrature must be one of {tuple(rules)}")
    H = traj.energies[kind]
    supply = traj.y_tilde * (traj.u_hat - traj.omega)
    integral = rules[quadrature](supply, np.asarray(traj.times, dtype=float))
    res = np.abs(H[-1] - H[0] - integral)
    return float(res) if np.ndim(res) == 0 else res


def max_increase(values):
    """Largest step-to-step increase of a recorded energy (0 when non-increasing)."""
    v = np.asarray(values, dtype=float)
    if v.shape[0] < 2:
        return 0.0
    inc = np.max(np.diff(v, axis=0), axis=0)
    inc = np.maximum(inc, 0.0)
    return float(inc) if np.ndim(inc) == 0 else inc


def is_nonincreasing(values, tol=1e-9):
    """True when no step increases ``values`` by more than ``tol``."""
    return bool(np.all(np.asarray(max_increase(values)) <= tol))
