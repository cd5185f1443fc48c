"""Ultimate bound of the ATAN error dynamics under a bounded rate of change of frequency."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import InfeasibleError

VARIANTS = ("as-printed", "derived-khalil")
_GOLDEN = 0.5 * (math.sqrt(5.0) - 1.0)


def sym_eig2(a, b, c):
    """``(lambda_min, lambda_max)`` of ``[[a, b], [b, c]]``; broadcasts."""
    m = 0.5 * (a + c)
    r = np.hypot(0.5 * (a - c), b)
    return m - r, m + r


@dataclass(frozen=True)
class UltimateBound:
    variant: str
    epsilon_star: float
    bound: float
    lambda_min_P: float
    lambda_max_P: float
    lambda_min_Q: float
    eps_max: float
    within_interval: bool

    def as_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def eps_window(kp, ki, variant):
    """Supremum of the admissible ``eps``; both matrices are positive definite on ``(0, eps_max)``."""
    if variant == "as-printed":
        # P = [[1, -e/2], [-e/2, ki]],  Q = [[kp - e ki, -e kp/2], [-e kp/2, e]]
        return min(2.0 * math.sqrt(ki), kp / (ki + 0.25 * kp * kp))
    # P = [[1, -e], [-e, ki]]/2,  Q = [[kp - e, -e kp/2], [-e kp/2, e ki]]
    return min(math.sqrt(ki), kp * ki / (ki + 0.25 * kp * kp))


def _matrices(kp, ki, eps, variant):
    e = np.asarray(eps, dtype=float)
    if variant == "as-printed":
        P = (1.0, -0.5 * e, ki)
        Q = (kp - e * ki, -0.5 * e * kp, e)
    else:
        P = (0.5, -0.5 * e, 0.5 * ki)
        Q = (kp - e, -0.5 * e * kp, e * ki)
    return P, Q


def bound_factor(kp, ki, eps, variant):
    """Bound per unit ``eta_max`` at ``eps``; ``inf`` where a matrix is not positive definite.

    as-printed: ``sqrt((eps^2 + ki) lmax(P)) / (ki lmin(P) lmin(Q))``.

    derived-khalil: with ``x = (delta, omega_tilde/ki)`` the function
    ``W = x^T P x`` satisfies ``dW/dt <= -lmin(Q)|x|^2 + |b| eta_max |x|`` with
    ``b = (eps/ki, -1)``, so trajectories enter the ball of radius
    ``mu = |b| eta_max / lmin(Q)`` and are ultimately bounded by ``mu sqrt(lmax(P)/lmin(P))``.
    """
    P, Q = _matrices(kp, ki, eps, variant)
    pmin, pmax = sym_eig2(*P)
    qmin, _ = sym_eig2(*Q)
    e = np.asarray(eps, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        if variant == "as-printed":
            f = np.sqrt((e * e + ki) * pmax) / (ki * pmin * qmin)
        else:
            f = np.hypot(e, ki) / ki / qmin * np.sqrt(pmax / pmin)
    f = np.where((pmin > 0) & (qmin > 0) & (e > 0), f, np.inf)
    return float(f) if f.ndim == 0 else f


def _golden(fun, lo, hi, tol):
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = fun(c), fun(d)
    while b - a > tol * (abs(c) + abs(d)):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = fun(d)
    return (c, fc) if fc < fd else (d, fd)


def eps_grid(eps_max, n):
    """Log-spaced interior grid on ``(0, eps_max)``."""
    return eps_max * np.logspace(-8.0, 0.0, n + 1)[:-1]


def ultimate_bound(kp, ki, eta_max, variant="derived-khalil", grid_points=10_000) -> UltimateBound:
    """Minimise the ultimate bound over ``eps``.

    A ``grid_points`` log grid locates the best cell and golden-section search refines
    it.  The bound scales linearly with ``eta_max``, so ``eta_max = 0`` gives 0 at the
    same optimal ``eps``.

    Raises
    ------
    InfeasibleError
        If no ``eps > 0`` makes both matrices positive definite.
    """
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")
    if not (kp > 0 and ki > 0):
        raise InfeasibleError("kp > 0 and ki > 0", "gains must be positive")
    if not (eta_max >= 0 and math.isfinite(eta_max)):
        raise ValueError("eta_max must be finite and >= 0")
    eps_max = eps_window(kp, ki, variant)
    if not eps_max > 0:
        raise InfeasibleError("P_eps > 0 and Q_eps > 0")
    grid = eps_grid(eps_max, grid_points)
    vals = bound_factor(kp, ki, grid, variant)
    i = int(np.argmin(vals))
    if not np.isfinite(vals[i]):
        raise InfeasibleError("P_eps > 0 and Q_eps > 0")
    lo = grid[i - 1] if i > 0 else 0.5 * grid[0]
    hi = grid[i + 1] if i + 1 < grid.size else eps_max
    eps, f = _golden(lambda e: bound_factor(kp, ki, e, variant), lo, hi, 1e-12)
    if vals[i] < f:
        eps, f = float(grid[i]), float(vals[i])
    P, Q = _matrices(kp, ki, eps, variant)
    pmin, pmax = sym_eig2(*P)
    qmin, _ = sym_eig2(*Q)
    value = f * eta_max
    return UltimateBound(variant, float(eps), float(value), float(pmin), float(pmax), float(qmin),
                         float(eps_max), bool(value < math.pi))


def brute_force_minimum(kp, ki, variant="derived-khalil", points=1_000_000):
    """``(eps, factor)`` minimising :func:`bound_factor` on a dense log grid (test oracle)."""
    grid = eps_grid(eps_window(kp, ki, variant), points)
    vals = bound_factor(kp, ki, grid, variant)
    i = int(np.argmin(vals))
    return float(grid[i]), float(vals[i])
