"""Randomised invariants checked with hypothesis."""
import math

import numpy as np
from hypothesis import given, settings, strategies as st

from gridpll.analysis import EquilibriumClass, classify_equilibrium
from gridpll.pll import (Family, Identity, PllConfig, Saturation, ScaledIdentity, adaptive_gain_phi, atan_pll,
                         control_u, rhs_dq, rhs_polar, srf_pll)
from gridpll.signals import (GAMMA, Constant, DampedSinusoid, DqVoltage, GridModel, angle_from_alpha_beta, clarke_transform,
                             park_transform, three_phase_voltage, wrap_angle)

W = 100 * math.pi
times = st.floats(0.0, 100.0)
amps = st.floats(0.1, 10.0)
phases = st.floats(-10.0, 10.0)
angles = st.floats(-50.0, 50.0)
grids = st.builds(lambda V, p, damped: GridModel(V, p, DampedSinusoid() if damped else Constant()),
                  amps, phases, st.booleans())


@given(grids, times)
def test_balance(g, t):
    assert abs(sum(three_phase_voltage(g, t))) < 1e-12 * g.V


@given(grids, times)
def test_clarke_identity_and_norm(g, t):
    ab = clarke_transform(three_phase_voltage(g, t))
    th = g.theta(t)
    assert abs(ab[0] - GAMMA * g.V * math.cos(th)) < 1e-12 * g.V
    assert abs(ab[1] - GAMMA * g.V * math.sin(th)) < 1e-12 * g.V
    assert abs(math.hypot(*ab) - GAMMA * g.V) < 1e-12 * g.V


@given(grids, times, angles)
def test_park_gives_angle_error(g, t, th_hat):
    dq = park_transform(three_phase_voltage(g, t), th_hat)
    # cos/sin of delta = th_hat - theta by angle addition; rounding th_hat - theta itself
    # would already cost ulp(theta) at large t
    th = g.theta(t)
    cd = math.cos(th_hat) * math.cos(th) + math.sin(th_hat) * math.sin(th)
    sd = math.sin(th_hat) * math.cos(th) - math.cos(th_hat) * math.sin(th)
    assert abs(dq[0] - GAMMA * g.V * cd) < 1e-12 * g.V
    assert abs(dq[1] - GAMMA * g.V * sd) < 1e-12 * g.V
    assert abs(math.hypot(*dq) - GAMMA * g.V) < 1e-12 * g.V


@given(grids, times)
def test_angle_round_trip(g, t):
    ang = angle_from_alpha_beta(clarke_transform(three_phase_voltage(g, t)))
    err = wrap_angle(ang - wrap_angle(g.theta(t)))
    assert abs(err) < 1e-9


@given(st.floats(-1e6, 1e6))
def test_wrap_range(x):
    w = wrap_angle(x)
    assert -math.pi <= w < math.pi
    assert abs(math.remainder(w - x, 2 * math.pi)) < 1e-9 * max(1.0, abs(x))


PHIS = [Identity(), ScaledIdentity(0.3), Saturation(4.0, 0.5), adaptive_gain_phi()]


@given(st.sampled_from(PHIS), st.floats(-1e3, 1e3).filter(lambda s: s != 0.0))
def test_sector(phi, s):
    # compare signs: the product underflows for tiny s
    assert math.copysign(1.0, phi(s)) == math.copysign(1.0, s) and phi(s) != 0.0


gains = st.floats(0.1, 5e3)
states = st.tuples(st.floats(-math.pi + 1e-6, math.pi - 1e-6), st.floats(W - 200, W + 200))


@settings(max_examples=200)
@given(st.sampled_from([Family.GSRF, Family.GATAN]), st.sampled_from(PHIS), gains, gains, states)
def test_polar_dq_consistency(fam, phi, kp, ki, state):
    cfg = PllConfig(fam, kp, ki, phi)
    d, w_hat = state
    gv = cfg.gamma_v
    v = np.array([gv * math.cos(d), gv * math.sin(d)])
    dv, dw = rhs_dq(cfg, v, w_hat, W)
    induced = (v[0] * dv[1] - v[1] * dv[0]) / gv**2
    dd, dwt = rhs_polar(cfg, d, w_hat, W)
    scale = 1.0 + abs(dd)
    assert abs(induced - dd) < 1e-10 * scale
    assert abs(dw - dwt) < 1e-10 * (1.0 + abs(dw))


@given(gains, gains, st.floats(-3.0, 3.0), st.floats(-3.0, 3.0), st.floats(200, 400))
def test_srf_specialisation(kp, ki, vd, vq, w_hat):
    cfg = srf_pll(kp, ki)
    assert abs(control_u(cfg, w_hat, (vd, vq)) - (-kp * vq + w_hat)) < 1e-12 * (1 + abs(w_hat) + kp * abs(vq))
    assert abs(rhs_dq(cfg, (vd, vq), w_hat, W)[1] - (-ki * vq)) < 1e-12 * (1 + ki * abs(vq))


@given(gains, gains, st.floats(-3.0, 3.0), st.floats(-3.0, 3.0), st.floats(200, 400))
def test_atan_specialisation(kp, ki, vd, vq, w_hat):
    if vd == 0.0 and vq == 0.0:
        return
    cfg = atan_pll(kp, ki)
    ang = math.atan2(vq, vd)
    ang = -math.pi if ang == math.pi else ang
    assert abs(control_u(cfg, w_hat, DqVoltage(vd, vq)) - (-kp * ang + w_hat)) < 1e-12 * (1 + abs(w_hat) + kp * 4)


@given(st.sampled_from([Family.GSRF, Family.GATAN]), gains, gains, st.integers(-20, 20))
def test_equilibria_vanish(fam, kp, ki, h):
    cfg = PllConfig(fam, kp, ki)
    if fam is Family.GATAN and h % 2:
        return
    assert rhs_polar(cfg, h * math.pi, W, W) == (0.0, 0.0)


def test_saddle_signature_grid():
    for kp in (0.5, 5, 50, 500, 5000):
        for ki in (0.5, 5, 50, 500, 5000):
            cfg = srf_pll(kp, ki)
            for h in range(-3, 4):
                r = classify_equilibrium(cfg, h * math.pi)
                if h % 2:
                    assert r.cls is EquilibriumClass.SADDLE and r.det < 0
                    lam = sorted(np.real(r.eigenvalues))
                    assert lam[0] < 0 < lam[1]
                else:
                    assert r.cls is EquilibriumClass.STABLE and r.det > 0 and r.trace < 0
