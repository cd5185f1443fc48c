"""Sublevel-set inner estimates of the regions of attraction and their Monte-Carlo check."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..dynamics import IntegratorConfig, simulate_closed_loop
from ..pll import Family, PllConfig, PllState
from ..signals import Constant, GridModel, NOMINAL_OMEGA

KINDS = ("derived-sublevel", "as-printed")


@dataclass(frozen=True)
class RoaEstimate:
    """Inner estimate of the basin of the equilibrium ``(h*pi, omega)``.

    ``level`` is the sublevel threshold ``c*`` of ``W1h`` (SRF) or ``W2h`` (ATAN) for the
    derived kind, and the right-hand side of the predicate for the as-printed kind.
    """

    family: Family
    h: int
    kind: str
    level: float
    gamma_v: float
    ki: float
    omega: float = NOMINAL_OMEGA

    def contains(self, delta, omega_hat):
        """Strict membership test; broadcasts over arrays."""
        u = np.asarray(delta, dtype=float) - self.h * math.pi
        w = np.asarray(omega_hat, dtype=float) - self.omega
        gv, ki = self.gamma_v, self.ki
        if self.family is Family.GSRF:
            if self.kind == "derived-sublevel":
                inside = (gv * (1.0 - np.cos(u)) + w**2 / (2 * ki) < self.level) & (np.abs(u) < math.pi)
            else:
                inside = (1.0 - np.cos(u)) + w**2 / (2 * gv) < self.level
        else:
            if self.kind == "derived-sublevel":
                inside = 0.5 * u**2 + w**2 / (2 * ki) < self.level
            else:
                inside = 4.0 * u**2 + w**2 < self.level
        return bool(inside) if inside.ndim == 0 else inside

    def omega_extent(self):
        """Largest ``|omega_hat - omega|`` over the set."""
        gv, ki = self.gamma_v, self.ki
        if self.family is Family.GSRF:
            if self.kind == "derived-sublevel":
                return math.sqrt(2 * ki * self.level)
            return math.sqrt(2 * gv * self.level)
        if self.kind == "derived-sublevel":
            return math.sqrt(2 * ki * self.level)
        return math.sqrt(self.level)

    def bounding_box(self):
        """``((delta_lo, delta_hi), (omega_lo, omega_hi))`` used for sampling.

        The angle range is clipped to ``h*pi +- pi``: the as-printed sets are not
        confined to one interval, and outside it they no longer describe the basin of ``h``.
        """
        c = self.h * math.pi
        half = math.pi
        if self.family is Family.GATAN:
            half = min(math.pi, math.sqrt(2 * self.level) if self.kind == "derived-sublevel"
                       else math.sqrt(self.level) / 2)
        w = self.omega_extent()
        return (c - half, c + half), (self.omega - w, self.omega + w)


def roa_inner_estimate(family, h, gains, gamma_v, kind="derived-sublevel", omega=NOMINAL_OMEGA) -> RoaEstimate:
    """Build the inner estimate for ``family`` around ``h*pi`` (``h`` even).

    Parameters
    ----------
    family : Family or str
    h : int
        Even equilibrium index.
    gains : (kp, ki)
    gamma_v : float
        Circle radius ``gamma*V``.
    kind : {"derived-sublevel", "as-printed"}
        ``derived-sublevel`` uses ``W1h < 2*gamma V`` (its value at the neighbouring
        saddles) or ``W2h < pi^2/2`` (the edge of the interval on which the ATAN output
        equals ``delta - h*pi``).  ``as-printed`` uses
        ``(1 - cos u) + w^2/(2 gamma V) < ki/(gamma V)`` and ``4u^2 + w^2 < 4 pi^2 ki``.
    """
    family = Family(family)
    if int(h) != h or h % 2:
        raise ValueError("h must be an even integer")
    kp, ki = gains
    if not (kp > 0 and ki > 0 and gamma_v > 0):
        raise ValueError("gains and gamma_v must be positive")
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}")
    if family is Family.GSRF:
        level = 2.0 * gamma_v if kind == "derived-sublevel" else ki / gamma_v
    else:
        level = 0.5 * math.pi**2 if kind == "derived-sublevel" else 4.0 * math.pi**2 * ki
    return RoaEstimate(family, int(h), kind, float(level), float(gamma_v), float(ki), float(omega))


def roa_samples(est: RoaEstimate, n, seed):
    """``n`` points drawn uniformly from the estimate by rejection on its bounding box.

    Uses a Philox counter-based generator so the draw depends only on ``seed``.
    """
    rng = np.random.Generator(np.random.Philox(seed))
    (d0, d1), (w0, w1) = est.bounding_box()
    out_d, out_w, have = [], [], 0
    while have < n:
        m = max(64, 2 * (n - have))
        d = rng.uniform(d0, d1, m)
        w = rng.uniform(w0, w1, m)
        keep = est.contains(d, w)
        out_d.append(d[keep])
        out_w.append(w[keep])
        have += int(np.count_nonzero(keep))
    return np.concatenate(out_d)[:n], np.concatenate(out_w)[:n]


def roa_converged(est: RoaEstimate, cfg: PllConfig, delta, omega_hat, t_end=5.0, dt=1e-4,
                  angle_tol=1e-3, omega_tol=1e-2):
    """Simulate each ``(delta, omega_hat)`` against a constant grid; True where it reaches ``h*pi``."""
    grid = GridModel(cfg.amplitude, 0.0, Constant(est.omega))
    icfg = IntegratorConfig(dt, t_end, record_stride=max(1, int(round(t_end / dt))))
    traj = simulate_closed_loop(grid, cfg, "polar", icfg, PllState(np.asarray(delta, float), np.asarray(omega_hat, float)))
    d_end, w_end = traj.delta[-1], traj.omega_error[-1]
    return (np.abs(d_end - est.h * math.pi) < angle_tol) & (np.abs(w_end) < omega_tol)


def roa_validate(est: RoaEstimate, cfg: PllConfig, n, seed=0, samples=None, t_end=5.0, dt=1e-4):
    """Fraction of ``n`` sampled initial conditions that converge to ``(h*pi, omega)``.

    ``samples`` may give the initial points explicitly as ``(delta, omega_hat)`` arrays.
    All samples are integrated as one vectorised batch.
    """
    if est.family is not cfg.family:
        raise ValueError("estimate and PLL belong to different families")
    if abs(est.ki - cfg.ki) > 1e-12 * cfg.ki or abs(est.gamma_v - cfg.gamma_v) > 1e-12 * cfg.gamma_v:
        raise ValueError("estimate parameters do not match the PLL configuration")
    if est.family is Family.GSRF and abs(cfg.output_gain * cfg.gamma_v - 1.0) > 1e-12:
        raise ValueError("SRF estimates assume the conventional output gain 1/(gamma V)")
    if samples is None:
        if n < 1:
            raise ValueError("n must be >= 1")
        delta, omega_hat = roa_samples(est, n, seed)
    else:
        delta, omega_hat = (np.atleast_1d(np.asarray(a, dtype=float)) for a in samples)
    ok = roa_converged(est, cfg, delta, omega_hat, t_end, dt)
    return float(np.count_nonzero(ok)) / ok.size
