"""Three-phase PCC voltage, frequency profiles and the Clarke/Park transforms.

The voltage at the point of common coupling is the balanced signal
``V * sin_bar(theta(t))``.  Its angle integrates a frequency profile and may
jump at configured phase-step instants.  Transforms are normalised so that the
stationary-frame vector is ``gamma*V*(cos theta, sin theta)`` and the rotating
frame vector is ``gamma*V*(cos delta, sin delta)`` with ``delta = theta_hat - theta``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence, Tuple, Union

import numpy as np

from .errors import IllDefinedAngleError

GAMMA = math.sqrt(1.5)
HALF_PI = 0.5 * math.pi
TWO_PI = 2.0 * math.pi
NOMINAL_OMEGA = 100.0 * math.pi
_SQRT3_2 = 0.5 * math.sqrt(3.0)

#: Amplitude-invariant-scaled Clarke matrix; maps ``V*sin_bar(theta)`` to ``gamma*V*(cos, sin)``.
CLARKE = np.array([[0.0, -_SQRT3_2, _SQRT3_2], [1.0, -0.5, -0.5]]) / GAMMA

#: The stationary-frame matrix with a zero leading entry in the second row.  Kept only
#: so tests can show that it does not produce ``gamma*V*sin(theta)``.
PRINTED_CLARKE = np.array([[0.0, -_SQRT3_2, _SQRT3_2], [0.0, -0.5, -0.5]]) / GAMMA


class ThreePhaseSample(NamedTuple):
    a: float
    b: float
    c: float


class AlphaBetaVoltage(NamedTuple):
    alpha: float
    beta: float


class DqVoltage(NamedTuple):
    d: float
    q: float


# --------------------------------------------------------------------------- angles


def wrap_angle(x):
    """Wrap an angle (scalar or array) into ``[-pi, pi)``."""
    if isinstance(x, float) or np.ndim(x) == 0:
        x = float(x)
        w = x - TWO_PI * round(x / TWO_PI)
        if w >= math.pi:
            w -= TWO_PI
        elif w < -math.pi:
            w += TWO_PI
        return w
    x = np.asarray(x, dtype=float)
    w = x - TWO_PI * np.rint(x / TWO_PI)
    w = np.where(w >= math.pi, w - TWO_PI, w)
    return np.where(w < -math.pi, w + TWO_PI, w)


def sincos(x):
    """Return ``(sin x, cos x)`` with the argument reduced by quarter turns of float pi.

    Multiples of ``math.pi / 2`` give exact 0/+-1 results, so angles such as
    ``math.pi`` are exact equilibria of the polar error dynamics.
    """
    if isinstance(x, float) or np.ndim(x) == 0:
        x = float(x)
        q = round(x / HALF_PI)
        r = x - q * HALF_PI
        s, c = math.sin(r), math.cos(r)
        k = q % 4
        if k == 0:
            return s, c
        if k == 1:
            return c, -s
        if k == 2:
            return -s, -c
        return -c, s
    x = np.asarray(x, dtype=float)
    q = np.rint(x / HALF_PI)
    r = x - q * HALF_PI
    s, c = np.sin(r), np.cos(r)
    k = np.mod(q, 4.0)
    sin_out = np.select([k == 0, k == 1, k == 2], [s, c, -s], -c)
    cos_out = np.select([k == 0, k == 1, k == 2], [c, -s, -c], s)
    return sin_out, cos_out


def sin_bar(theta):
    """Three-phase sine vector; a leading axis of length 3 is added."""
    # the shifted phases come from angle addition, so only theta itself is range-reduced
    theta = np.asarray(theta, dtype=float)
    s, c = np.sin(theta), np.cos(theta)
    return np.stack([s, -0.5 * s - _SQRT3_2 * c, -0.5 * s + _SQRT3_2 * c])


def cos_bar(theta):
    theta = np.asarray(theta, dtype=float)
    s, c = np.sin(theta), np.cos(theta)
    return np.stack([c, -0.5 * c + _SQRT3_2 * s, -0.5 * c - _SQRT3_2 * s])


# --------------------------------------------------------------------------- profiles


@dataclass(frozen=True)
class Constant:
    """Constant grid frequency ``omega0`` (rad/s)."""

    omega0: float = NOMINAL_OMEGA

    def __post_init__(self):
        if not self.omega0 > 0:
            raise ValueError("omega0 must be positive")

    def omega(self, t):
        if isinstance(t, (float, int)):
            return self.omega0
        return self.omega0 + 0.0 * np.asarray(t, dtype=float) if np.ndim(t) else self.omega0

    def eta(self, t):
        return 0.0 * np.asarray(t, dtype=float) if np.ndim(t) else 0.0

    def phase(self, t):
        return self.omega0 * (np.asarray(t, dtype=float) if np.ndim(t) else float(t))

    @property
    def eta_max(self):
        return 0.0


@dataclass(frozen=True)
class DampedSinusoid:
    """``omega0`` before ``onset``, then ``omega0 + amplitude*exp(-decay*s)*sin(rate*s)``, ``s = t - onset``."""

    omega0: float = NOMINAL_OMEGA
    amplitude: float = -8.0 * math.pi
    decay: float = 0.1
    rate: float = 0.2
    onset: float = 1.0

    def __post_init__(self):
        if not self.omega0 > 0:
            raise ValueError("omega0 must be positive")
        if self.decay < 0 or self.decay**2 + self.rate**2 == 0:
            raise ValueError("decay must be >= 0 and (decay, rate) not both zero")
        if self.onset < 0:
            raise ValueError("onset must be >= 0")

    def _split(self, t):
        s = np.asarray(t, dtype=float) - self.onset
        on = s >= 0
        return np.where(on, s, 0.0), on

    def omega(self, t):
        if isinstance(t, (float, int)) or np.ndim(t) == 0:
            s = float(t) - self.onset
            if s < 0:
                return self.omega0
            return self.omega0 + self.amplitude * math.exp(-self.decay * s) * math.sin(self.rate * s)
        s, on = self._split(t)
        dev = self.amplitude * np.exp(-self.decay * s) * np.sin(self.rate * s)
        return self.omega0 + np.where(on, dev, 0.0)

    def eta(self, t):
        a, b = self.decay, self.rate
        if isinstance(t, (float, int)) or np.ndim(t) == 0:
            s = float(t) - self.onset
            if s < 0:
                return 0.0
            return self.amplitude * math.exp(-a * s) * (b * math.cos(b * s) - a * math.sin(b * s))
        s, on = self._split(t)
        val = self.amplitude * np.exp(-a * s) * (b * np.cos(b * s) - a * np.sin(b * s))
        return np.where(on, val, 0.0)

    def phase(self, t):
        a, b = self.decay, self.rate
        s, on = self._split(t)
        integral = (b - np.exp(-a * s) * (a * np.sin(b * s) + b * np.cos(b * s))) / (a * a + b * b)
        out = self.omega0 * np.asarray(t, dtype=float) + np.where(on, self.amplitude * integral, 0.0)
        return float(out) if np.ndim(t) == 0 else out

    @property
    def eta_max(self):
        # |eta| = |A| e^{-as} |b cos(bs) - a sin(bs)|; the envelope decays, so the sup is
        # attained at the onset or at the first stationary point after it.
        a, b = self.decay, abs(self.rate)
        if b == 0.0:
            return 0.0
        cands = [0.0] + [s for s in ((k * math.pi - 2.0 * math.atan2(a, b)) / b for k in range(3)) if s > 0]
        return max(abs(self.amplitude) * math.exp(-a * s) * abs(b * math.cos(b * s) - a * math.sin(b * s))
                   for s in cands)

    def peak_deviation(self):
        """Return ``(time, |delta omega|)`` at the first extremum of the deviation."""
        a, b = self.decay, abs(self.rate)
        s = math.atan2(b, a) / b if b else 0.0
        return self.onset + s, abs(self.amplitude) * math.exp(-a * s) * abs(math.sin(b * s))


@dataclass(frozen=True)
class TabulatedRoCoF:
    """Piecewise-linear RoCoF samples ``eta(times)``; zero outside the sampled window."""

    omega0: float
    times: Tuple[float, ...]
    eta_samples: Tuple[float, ...]
    eta_max: float

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        e = np.asarray(self.eta_samples, dtype=float)
        if not self.omega0 > 0:
            raise ValueError("omega0 must be positive")
        if t.ndim != 1 or t.shape != e.shape or t.size < 2:
            raise ValueError("times and eta_samples must be 1-D of equal length >= 2")
        if t[0] < 0 or np.any(np.diff(t) <= 0):
            raise ValueError("times must be non-negative and strictly increasing")
        if np.max(np.abs(e)) > self.eta_max:
            raise ValueError("sup |eta| exceeds eta_max")
        object.__setattr__(self, "times", tuple(float(v) for v in t))
        object.__setattr__(self, "eta_samples", tuple(float(v) for v in e))
        h = np.diff(t)
        m = np.diff(e) / h
        # cumulative first and second integrals at the knots; an overflow here shows up
        # as a non-finite state once integrated
        with np.errstate(over="ignore", invalid="ignore"):
            d_omega = np.concatenate([[0.0], np.cumsum(e[:-1] * h + 0.5 * m * h**2)])
            d_phase = np.concatenate(
                [[0.0], np.cumsum(d_omega[:-1] * h + 0.5 * e[:-1] * h**2 + m * h**3 / 6.0)]
            )
        object.__setattr__(self, "_tab", (t, e, m, d_omega, d_phase))

    def _locate(self, t):
        knots, e, m, d_omega, d_phase = self._tab
        t = np.asarray(t, dtype=float)
        i = np.clip(np.searchsorted(knots, t, side="right") - 1, 0, knots.size - 2)
        u = np.clip(t - knots[i], 0.0, None)
        return t, i, u

    def eta(self, t):
        knots, e, m, _, _ = self._tab
        tt, i, u = self._locate(t)
        inside = (tt >= knots[0]) & (tt <= knots[-1])
        out = np.where(inside, e[i] + m[i] * u, 0.0)
        return float(out) if np.ndim(t) == 0 else out

    def _omega_dev(self, t):
        knots, e, m, d_omega, _ = self._tab
        tt, i, u = self._locate(t)
        u = np.minimum(u, knots[i + 1] - knots[i])
        val = d_omega[i] + e[i] * u + 0.5 * m[i] * u**2
        return tt, np.where(tt < knots[0], 0.0, val)

    def omega(self, t):
        _, dev = self._omega_dev(t)
        out = self.omega0 + dev
        return float(out) if np.ndim(t) == 0 else out

    def phase(self, t):
        knots, e, m, d_omega, d_phase = self._tab
        tt, i, u = self._locate(t)
        seg = knots[i + 1] - knots[i]
        uu = np.minimum(u, seg)
        inner = d_phase[i] + d_omega[i] * uu + 0.5 * e[i] * uu**2 + m[i] * uu**3 / 6.0
        tail = np.where(tt > knots[-1], d_omega[-1] * (tt - knots[-1]), 0.0)
        dev = np.where(tt < knots[0], 0.0, inner + tail)
        out = self.omega0 * tt + dev
        return float(out) if np.ndim(t) == 0 else out


FrequencyProfile = Union[Constant, DampedSinusoid, TabulatedRoCoF]


def frequency_profile_eval(profile: FrequencyProfile, t):
    """Instantaneous frequency (rad/s) and RoCoF (rad/s^2) at time ``t``."""
    if np.any(np.asarray(t) < 0):
        raise ValueError("t must be >= 0")
    return profile.omega(t), profile.eta(t)


# --------------------------------------------------------------------------- grid


@dataclass(frozen=True)
class GridModel:
    """Balanced PCC voltage source.

    Parameters
    ----------
    V : float
        Peak phase amplitude (per unit by default).
    phi0 : float
        Phase at ``t = 0`` in rad.
    profile : FrequencyProfile
        Frequency description.
    phase_steps : sequence of (time, jump)
        Instantaneous angle jumps; a step at ``t_s`` is included in ``theta(t)`` for ``t >= t_s``.
    """

    V: float = 1.0
    phi0: float = 0.0
    profile: FrequencyProfile = field(default_factory=Constant)
    phase_steps: Tuple[Tuple[float, float], ...] = ()

    def __post_init__(self):
        if not self.V > 0:
            raise ValueError("V must be positive")
        steps = tuple((float(t), float(j)) for t, j in self.phase_steps)
        times = [t for t, _ in steps]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("phase-step times must be strictly increasing")
        if times and times[0] < 0:
            raise ValueError("phase-step times must be >= 0")
        object.__setattr__(self, "phase_steps", steps)

    @property
    def gamma_v(self):
        return GAMMA * self.V

    def omega(self, t):
        return self.profile.omega(t)

    def eta(self, t):
        return self.profile.eta(t)

    def step_offset(self, t):
        if not self.phase_steps:
            return 0.0 * np.asarray(t, dtype=float) if np.ndim(t) else 0.0
        times = np.array([s for s, _ in self.phase_steps])
        jumps = np.concatenate([[0.0], np.cumsum([j for _, j in self.phase_steps])])
        idx = np.searchsorted(times, np.asarray(t, dtype=float), side="right")
        out = jumps[idx]
        return float(out) if np.ndim(t) == 0 else out

    def theta(self, t):
        return self.phi0 + self.profile.phase(t) + self.step_offset(t)


def three_phase_voltage(model: GridModel, t) -> ThreePhaseSample:
    """Instantaneous phase voltages ``V*sin_bar(theta(t))``."""
    if np.any(np.asarray(t) < 0):
        raise ValueError("t must be >= 0")
    v = model.V * sin_bar(model.theta(t))
    return ThreePhaseSample(*v)


# --------------------------------------------------------------------------- transforms


def clarke_transform(s: Sequence[float]) -> AlphaBetaVoltage:
    """Stationary-frame components of a three-phase sample (leading axis of length 3)."""
    ab = np.tensordot(CLARKE, np.asarray(s, dtype=float), axes=1)
    return AlphaBetaVoltage(*ab)


def park_matrix(theta_hat):
    """3x3 -> 2 rotating-frame map at estimated angle ``theta_hat``.

    Rows are ``sin_bar(theta_hat)/gamma`` and ``-cos_bar(theta_hat)/gamma``, which yield
    ``gamma*V*(cos delta, sin delta)`` for ``v = V*sin_bar(theta)``.
    """
    return np.stack([sin_bar(theta_hat), -cos_bar(theta_hat)]) / GAMMA


def printed_park_matrix(theta_hat):
    """Rotating-frame matrix built from ``[sin_bar; cos_bar]`` at ``theta_hat - pi/2``.

    Produces ``gamma*V*(sin delta, cos delta)``, i.e. the components swapped; kept for
    comparison tests only.
    """
    vartheta = np.asarray(theta_hat, dtype=float) - HALF_PI
    return np.stack([sin_bar(vartheta), cos_bar(vartheta)]) / GAMMA


def park_transform(s: Sequence[float], theta_hat) -> DqVoltage:
    v = np.asarray(s, dtype=float)
    m = park_matrix(theta_hat)
    if m.ndim == 2:
        return DqVoltage(*(m @ v))
    # broadcast over a trailing batch axis
    return DqVoltage(*np.einsum("ij...,j...->i...", m, v))


def angle_from_alpha_beta(v: Sequence[float]) -> float:
    """Angle of a stationary-frame vector, wrapped to ``[-pi, pi)``."""
    alpha, beta = float(v[0]), float(v[1])
    if alpha == 0.0 and beta == 0.0:
        raise IllDefinedAngleError("angle of the zero vector is undefined")
    return wrap_angle(math.atan2(beta, alpha))
