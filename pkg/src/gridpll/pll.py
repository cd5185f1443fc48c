"""PLL control laws, passive outputs and closed-loop vector fields.

Two families are provided.  ``gSRF`` feeds the output ``-ref^T J2 v_hat`` through a
PI law, ``gATAN`` feeds the wrapped angle difference ``atan2(v_hat) - atan2(ref)``.
Both have the form::

    y     = output_gain * y_raw
    u_hat = -kp * phi(y) + omega_hat
    d omega_hat / dt = -ki * y

``output_gain`` rescales the passive output (a positive scaling keeps the map
passive).  The conventional SRF-PLL drives both paths with ``V_q``, which is
``y_raw / (gamma V)``; see :func:`srf_pll`.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Tuple, Union

import numpy as np

from .errors import IllDefinedAngleError
from .signals import GAMMA, DqVoltage, sincos, wrap_angle


class Family(str, enum.Enum):
    GSRF = "gSRF"
    GATAN = "gATAN"


# --------------------------------------------------------------------------- phi catalog


@dataclass(frozen=True)
class Identity:
    def __call__(self, s):
        return s

    @property
    def slope_at_zero(self):
        return 1.0


@dataclass(frozen=True)
class ScaledIdentity:
    k: float

    def __post_init__(self):
        if not self.k > 0:
            raise ValueError("ScaledIdentity requires k > 0")

    def __call__(self, s):
        return self.k * s

    @property
    def slope_at_zero(self):
        return self.k


@dataclass(frozen=True)
class Saturation:
    """``clip(slope * s, -limit, limit)``."""

    slope: float
    limit: float

    def __post_init__(self):
        if not (self.slope > 0 and self.limit > 0):
            raise ValueError("Saturation requires slope > 0 and limit > 0")

    def __call__(self, s):
        if np.ndim(s) == 0:
            return min(max(self.slope * s, -self.limit), self.limit)
        return np.clip(self.slope * np.asarray(s), -self.limit, self.limit)

    @property
    def slope_at_zero(self):
        return self.slope


@dataclass(frozen=True)
class PiecewiseLinear:
    """Linear interpolation through ``breakpoints``; the end segments are extended.

    The breakpoints must contain the origin and respect ``s * phi(s) > 0`` away from
    it; the outer segments must not slope downwards.
    """

    breakpoints: Tuple[Tuple[float, float], ...]

    def __post_init__(self):
        pts = np.asarray(self.breakpoints, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
            raise ValueError("breakpoints must be a sequence of at least two (s, phi) pairs")
        xs, ys = pts[:, 0], pts[:, 1]
        if np.any(np.diff(xs) <= 0):
            raise ValueError("breakpoint abscissae must be strictly increasing")
        zero = np.flatnonzero(xs == 0.0)
        if zero.size != 1 or ys[zero[0]] != 0.0:
            raise ValueError("piecewise phi must pass through the origin")
        nz = xs != 0.0
        if np.any(xs[nz] * ys[nz] <= 0):
            raise ValueError("sector condition s*phi(s) > 0 violated at a breakpoint")
        slopes = np.diff(ys) / np.diff(xs)
        if slopes[0] < 0 or slopes[-1] < 0:
            raise ValueError("sector condition violated by extrapolation of an end segment")
        object.__setattr__(self, "breakpoints", tuple((float(x), float(y)) for x, y in pts))
        object.__setattr__(self, "_xy", (xs, ys, slopes))

    def __call__(self, s):
        xs, ys, slopes = self._xy
        s_arr = np.asarray(s, dtype=float)
        i = np.clip(np.searchsorted(xs, s_arr, side="right") - 1, 0, xs.size - 2)
        # evaluate from the nearer knot so that tiny |s| next to the origin keeps its sign
        left = ys[i] + slopes[i] * (s_arr - xs[i])
        right = ys[i + 1] + slopes[i] * (s_arr - xs[i + 1])
        out = np.where(s_arr - xs[i] <= xs[i + 1] - s_arr, left, right)
        return float(out) if np.ndim(s) == 0 else out

    @property
    def slope_at_zero(self):
        # right derivative; the classification only depends on its sign
        xs, _, slopes = self._xy
        i = int(np.flatnonzero(xs == 0.0)[0])
        return float(slopes[min(i, slopes.size - 1)])


PhiFunction = Union[Identity, ScaledIdentity, Saturation, PiecewiseLinear]


def adaptive_gain_phi(inner_slope=10.0, outer_slope=1.0, knee=0.1, span=math.pi):
    """Odd piecewise-linear phi: ``inner_slope`` for ``|s| <= knee``, ``outer_slope`` beyond."""
    y_knee = inner_slope * knee
    y_span = y_knee + outer_slope * (span - knee)
    return PiecewiseLinear(((-span, -y_span), (-knee, -y_knee), (0.0, 0.0), (knee, y_knee), (span, y_span)))


def phi_eval(phi, s):
    return phi(s)


# --------------------------------------------------------------------------- config


class PllState(NamedTuple):
    theta_hat: float
    omega_hat: float


@dataclass(frozen=True)
class PllConfig:
    """Estimator configuration.

    Parameters
    ----------
    family : Family or str
        ``"gSRF"`` or ``"gATAN"``.
    kp, ki : float
        Proportional and integral gains, both positive.
    phi : callable
        Sector nonlinearity in the proportional path.
    amplitude : float
        Grid amplitude ``V`` the loop is designed for; fixes the circle radius ``gamma*V``.
    reference : DqVoltage, optional
        Set-point on the circle of radius ``gamma*V``; defaults to ``(gamma*V, 0)``.
    output_gain : float
        Positive scaling applied to the passive output before the PI law.
    """

    family: Family
    kp: float
    ki: float
    phi: PhiFunction = field(default_factory=Identity)
    amplitude: float = 1.0
    reference: Optional[DqVoltage] = None
    output_gain: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        for name in ("kp", "ki", "amplitude", "output_gain"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val > 0):
                raise ValueError(f"{name} must be positive and finite, got {val!r}")
        gv = GAMMA * self.amplitude
        ref = DqVoltage(gv, 0.0) if self.reference is None else DqVoltage(*map(float, self.reference))
        if abs(math.hypot(*ref) - gv) > 1e-9 * gv:
            raise ValueError("reference must lie on the circle of radius gamma*V")
        object.__setattr__(self, "reference", ref)
        for s in (-1.0, -1e-3, 1e-3, 1.0):
            if not s * self.phi(s) > 0:
                raise ValueError("phi violates the sector condition")

    @property
    def gamma_v(self):
        return GAMMA * self.amplitude

    @property
    def reference_angle(self):
        return math.atan2(self.reference.q, self.reference.d)

    @property
    def is_srf(self):
        return self.family is Family.GSRF


def srf_pll(kp, ki, amplitude=1.0):
    """Conventional SRF-PLL: ``u_hat = -kp*V_q + omega_hat``, ``d omega_hat/dt = -ki*V_q``."""
    return PllConfig(Family.GSRF, kp, ki, Identity(), amplitude, output_gain=1.0 / (GAMMA * amplitude))


def atan_pll(kp, ki, amplitude=1.0):
    """Conventional ATAN-PLL driven by ``atan2(V_q, V_d)``."""
    return PllConfig(Family.GATAN, kp, ki, Identity(), amplitude)


# --------------------------------------------------------------------------- outputs


def output_y1(v_hat, ref):
    """``-ref^T J2 v_hat``; with ``ref = (gamma V, 0)`` this is ``gamma V * V_q``."""
    v = np.asarray(v_hat, dtype=float)
    r = np.asarray(ref, dtype=float)
    return r[0] * v[1] - r[1] * v[0]


def output_y2(v_hat, ref):
    """Wrapped difference of the estimated and reference angles, in ``[-pi, pi)``."""
    v = np.asarray(v_hat, dtype=float)
    r = np.asarray(ref, dtype=float)
    if np.any((v[0] == 0) & (v[1] == 0)) or np.any((r[0] == 0) & (r[1] == 0)):
        raise IllDefinedAngleError("angle of a zero-norm dq vector is undefined")
    return wrap_angle(np.arctan2(v[1], v[0]) - np.arctan2(r[1], r[0]))


def passive_output(cfg: PllConfig, v_hat):
    if cfg.is_srf:
        return output_y1(v_hat, cfg.reference)
    return output_y2(v_hat, cfg.reference)


def passive_output_fn(cfg: PllConfig):
    """Specialised ``v_hat -> y_raw`` for a fixed configuration (hot loop helper)."""
    rd, rq = cfg.reference
    if cfg.is_srf:
        def y1(v):
            return rd * v[1] - rq * v[0]
        return y1
    ang = cfg.reference_angle

    def y2(v):
        d, q = v[0], v[1]
        if isinstance(d, float):
            if d == 0.0 and q == 0.0:
                raise IllDefinedAngleError("angle of a zero-norm dq vector is undefined")
            return wrap_angle(math.atan2(q, d) - ang)
        return output_y2(v, cfg.reference)

    return y2


def polar_output_fn(cfg: PllConfig):
    """Specialised ``delta -> y_raw`` for a fixed configuration (hot loop helper)."""
    ang = cfg.reference_angle
    if cfg.is_srf:
        gv2 = cfg.gamma_v * cfg.gamma_v

        def y1(delta):
            return gv2 * sincos(delta - ang if ang else delta)[0]
        return y1

    def y2(delta):
        return wrap_angle(delta - ang if ang else delta)

    return y2


def control_u(cfg: PllConfig, state, v_hat):
    """Frequency command ``-kp*phi(y) + omega_hat``; ``state`` provides ``omega_hat``."""
    omega_hat = state.omega_hat if hasattr(state, "omega_hat") else state
    y = cfg.output_gain * passive_output(cfg, v_hat)
    return -cfg.kp * cfg.phi(y) + omega_hat


def rhs_dq(cfg: PllConfig, v_hat, omega_hat, omega):
    """Closed-loop field in dq coordinates.

    Returns ``(d v_hat/dt, d omega_hat/dt)`` with ``d v_hat/dt = J2 (u_hat - omega) v_hat``.
    """
    v = np.asarray(v_hat, dtype=float)
    y = cfg.output_gain * passive_output(cfg, v)
    u_tilde = -cfg.kp * cfg.phi(y) + omega_hat - omega
    dv = np.stack([-u_tilde * v[1], u_tilde * v[0]])
    return dv, -cfg.ki * y


def polar_output(cfg: PllConfig, delta):
    """Raw passive output expressed through the angle error ``delta``."""
    return polar_output_fn(cfg)(delta)


def rhs_polar(cfg: PllConfig, delta, omega_hat, omega, eta=0.0):
    """Closed-loop field in polar coordinates.

    Returns ``(d delta/dt, d omega_tilde/dt)`` where ``omega_tilde = omega_hat - omega``;
    the grid RoCoF ``eta`` enters the second component only.
    """
    y = cfg.output_gain * polar_output(cfg, delta)
    d_delta = -cfg.kp * cfg.phi(y) + omega_hat - omega
    return d_delta, -cfg.ki * y - eta


def dq_from_delta(cfg: PllConfig, delta):
    """Point ``gamma*V*(cos delta, sin delta)`` on the dq circle."""
    s, c = sincos(delta)
    return np.stack([cfg.gamma_v * c, cfg.gamma_v * s]) if np.ndim(delta) else DqVoltage(cfg.gamma_v * c, cfg.gamma_v * s)
