"""Linearisation of the polar error dynamics and the linear ATAN solution."""
from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass
from typing import NamedTuple, Tuple

import numpy as np

from ..pll import PllConfig, rhs_polar
from ..signals import NOMINAL_OMEGA, sincos

_RHS_TOL = 1e-9


class EquilibriumClass(str, enum.Enum):
    STABLE = "Stable"
    SADDLE = "Saddle"
    UNSTABLE = "Unstable"
    DEGENERATE = "Degenerate"


@dataclass(frozen=True)
class EquilibriumReport:
    location: Tuple[float, float]
    jacobian: np.ndarray
    eigenvalues: Tuple[complex, complex]
    cls: EquilibriumClass

    @property
    def det(self):
        J = self.jacobian
        return float(J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0])

    @property
    def trace(self):
        return float(self.jacobian[0, 0] + self.jacobian[1, 1])


def eig2(J):
    """Eigenvalues of a real 2x2 matrix from its trace and determinant."""
    tr = J[0][0] + J[1][1]
    det = J[0][0] * J[1][1] - J[0][1] * J[1][0]
    disc = cmath.sqrt(0.25 * tr * tr - det)
    return 0.5 * tr + disc, 0.5 * tr - disc


def classify_equilibrium(cfg: PllConfig, delta_eq, gamma_v=None, omega=NOMINAL_OMEGA) -> EquilibriumReport:
    """Classify the equilibrium ``(delta_eq, omega)`` of the polar closed loop.

    The Jacobian is taken in ``(delta, omega_tilde)``.  For the SRF family it is
    ``[[-kp*g*phi'(0)*(gamma V)^2*cos(delta_eq), 1], [-ki*g*(gamma V)^2*cos(delta_eq), 0]]``,
    which is ``[[-kp*gamma V*cos, 1], [-ki*gamma V*cos, 0]]`` for the conventional loop; the
    ATAN Jacobian is ``[[-kp*phi'(0), 1], [-ki, 0]]`` inside its interval.

    Raises
    ------
    ValueError
        If the point is not an equilibrium (field norm above 1e-9), or ``gamma_v``
        disagrees with the configuration.
    """
    if gamma_v is not None and abs(gamma_v - cfg.gamma_v) > 1e-12 * cfg.gamma_v:
        raise ValueError("gamma_v does not match the PLL amplitude")
    delta_eq = float(delta_eq)
    f = rhs_polar(cfg, delta_eq, omega, omega)
    if math.hypot(*f) > _RHS_TOL:
        raise ValueError(f"delta={delta_eq!r} is not an equilibrium (|rhs|={math.hypot(*f):.3g})")
    if cfg.is_srf:
        dy = cfg.gamma_v**2 * sincos(delta_eq - cfg.reference_angle)[1]
    else:
        dy = 1.0
    g = cfg.output_gain
    J = np.array([[-cfg.kp * cfg.phi.slope_at_zero * g * dy, 1.0], [-cfg.ki * g * dy, 0.0]])
    eigs = eig2(J)
    det = J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
    tr = J[0, 0] + J[1, 1]
    if det < 0:
        cls = EquilibriumClass.SADDLE
    elif det > 0 and tr < 0:
        cls = EquilibriumClass.STABLE
    elif det > 0:
        cls = EquilibriumClass.UNSTABLE
    else:
        cls = EquilibriumClass.DEGENERATE
    return EquilibriumReport((delta_eq, omega), J, eigs, cls)


class LinearSolution(NamedTuple):
    delta: np.ndarray
    omega_tilde: np.ndarray
    in_interval: bool


def _expm_coeffs(s, q2, t):
    """``(a, b)`` with ``exp(A t) = a*I + b*(A - s I)``; ``q2 = s^2 - det``."""
    e = np.exp(s * t)
    if q2 > 0:
        q = math.sqrt(q2)
        return e * np.cosh(q * t), e * np.sinh(q * t) / q
    if q2 < 0:
        q = math.sqrt(-q2)
        return e * np.cos(q * t), e * np.sin(q * t) / q
    return e, e * t


def atan_linear_solution(kp, ki, x0, t, check_points=2001) -> LinearSolution:
    """Closed-form solution of ``d(delta, w)/dt = [[-kp, 1], [-ki, 0]] (delta, w)``.

    Valid while ``delta`` stays in ``[-pi, pi)``, where the ATAN loop is linear.  The
    exponential is built from the eigenvalues ``s +- q`` of the matrix; the repeated
    root ``kp^2 = 4 ki`` uses the Jordan form ``exp(s t) (I + t (A - s I))``.  The interval
    condition is checked on ``check_points`` samples of ``[0, max(t)]`` and reported in
    ``in_interval``.
    """
    if not (kp > 0 and ki > 0):
        raise ValueError("gains must be positive")
    A = np.array([[-kp, 1.0], [-ki, 0.0]])
    s = -0.5 * kp
    q2 = s * s - ki
    x0 = np.asarray(x0, dtype=float)
    N = A - s * np.eye(2)
    Nx = N @ x0

    def at(tt):
        a, b = _expm_coeffs(s, q2, np.asarray(tt, dtype=float))
        return a * x0[0] + b * Nx[0], a * x0[1] + b * Nx[1]

    delta, w = at(t)
    t_max = float(np.max(t))
    d_chk, _ = at(np.linspace(0.0, t_max, check_points))
    inside = bool(np.all((d_chk >= -math.pi) & (d_chk < math.pi)))
    return LinearSolution(delta, w, inside)

