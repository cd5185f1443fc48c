import math

import numpy as np
import pytest
from scipy.integrate import quad

from gridpll.errors import IllDefinedAngleError
from gridpll.signals import (CLARKE, GAMMA, PRINTED_CLARKE, Constant, DampedSinusoid, GridModel, TabulatedRoCoF,
                             angle_from_alpha_beta, clarke_transform, frequency_profile_eval, park_transform,
                             printed_park_matrix, sincos, three_phase_voltage, wrap_angle)

W = 100 * math.pi


def test_three_phase_at_zero():
    v = three_phase_voltage(GridModel(), 0.0)
    assert v == pytest.approx((0.0, -0.8660254, 0.8660254), abs=1e-7)


def test_three_phase_quarter_period():
    v = three_phase_voltage(GridModel(), 0.005)
    assert v == pytest.approx((1.0, -0.5, -0.5), abs=1e-12)


def test_damped_phase_matches_quadrature():
    prof = DampedSinusoid()
    g = GridModel(profile=prof)
    dev, _ = quad(lambda s: -8 * math.pi * math.exp(-0.1 * s) * math.sin(0.2 * s), 0.0, 1.0, epsabs=1e-13)
    ref = 2.0 * W + dev
    assert g.theta(2.0) == pytest.approx(ref, abs=1e-9)
    v = three_phase_voltage(g, 2.0)
    assert v.a == pytest.approx(math.sin(ref), abs=1e-9)


def test_negative_time_rejected():
    with pytest.raises(ValueError):
        three_phase_voltage(GridModel(), -1.0)


@pytest.mark.parametrize("sample, expected", [
    ((0.0, -0.8660254037844386, 0.8660254037844386), (GAMMA, 0.0)),
    ((1.0, -0.5, -0.5), (0.0, GAMMA)),
    ((0.0, 0.0, 0.0), (0.0, 0.0)),
])
def test_clarke_examples(sample, expected):
    assert clarke_transform(sample) == pytest.approx(expected, abs=1e-12)


def test_printed_clarke_breaks_identity():
    v = np.array([1.0, -0.5, -0.5])  # theta = pi/2
    assert (CLARKE @ v)[1] == pytest.approx(GAMMA)
    assert (PRINTED_CLARKE @ v)[1] == pytest.approx(1.0 / (2 * GAMMA))


@pytest.mark.parametrize("delta, expected", [(0.0, (GAMMA, 0.0)), (math.pi / 2, (0.0, GAMMA)),
                                             (math.pi, (-GAMMA, 0.0))])
def test_park_examples(delta, expected):
    theta = 0.37
    v = three_phase_voltage(GridModel(phi0=theta), 0.0)
    assert park_transform(v, theta + delta) == pytest.approx(expected, abs=1e-12)


def test_printed_park_swaps_components():
    theta, delta = 0.2, 0.5
    v = np.asarray(three_phase_voltage(GridModel(phi0=theta), 0.0))
    out = printed_park_matrix(theta + delta) @ v
    assert out == pytest.approx((GAMMA * math.sin(delta), GAMMA * math.cos(delta)), abs=1e-12)


def test_park_batch():
    theta = np.linspace(0, 6, 7)
    v = np.stack(three_phase_voltage(GridModel(), 0.0))[:, None] * np.ones(7)
    out = park_transform(v, theta)
    assert np.allclose(out.d, GAMMA * np.cos(theta), atol=1e-12)
    assert np.allclose(out.q, GAMMA * np.sin(theta), atol=1e-12)


@pytest.mark.parametrize("v, expected", [((GAMMA, 0.0), 0.0), ((0.0, GAMMA), math.pi / 2), ((-GAMMA, 0.0), -math.pi)])
def test_angle_from_alpha_beta(v, expected):
    assert angle_from_alpha_beta(v) == expected


def test_angle_of_zero_vector():
    with pytest.raises(IllDefinedAngleError):
        angle_from_alpha_beta((0.0, 0.0))


def test_wrap_convention():
    assert wrap_angle(math.pi) == -math.pi
    assert wrap_angle(-math.pi) == -math.pi
    assert wrap_angle(3 * math.pi / 2) == pytest.approx(-math.pi / 2)
    arr = wrap_angle(np.array([math.pi, -5 * math.pi / 4, 0.1]))
    assert arr == pytest.approx([-math.pi, 3 * math.pi / 4, 0.1])


def test_sincos_exact_at_multiples_of_pi():
    for h in range(-6, 7):
        s, c = sincos(h * math.pi)
        assert s == 0.0 and abs(c) == 1.0
    s, c = sincos(np.array([math.pi, 0.5 * math.pi]))
    assert s[0] == 0.0 and c[1] == 0.0


def test_frequency_profiles():
    assert frequency_profile_eval(Constant(W), 3.0) == (pytest.approx(314.159265, abs=1e-6), 0.0)
    prof = DampedSinusoid()
    w1, e1 = frequency_profile_eval(prof, 1.0)
    assert w1 == W
    assert e1 == pytest.approx(-8 * math.pi * 0.2)
    w2, _ = frequency_profile_eval(prof, 2.0)
    assert w2 == pytest.approx(W - 8 * math.pi * math.exp(-0.1) * math.sin(0.2), abs=1e-12)
    assert W - w2 == pytest.approx(4.5178, abs=2e-4)


def test_damped_eta_is_derivative():
    prof = DampedSinusoid()
    t = np.linspace(1.5, 20, 50)
    h = 1e-5
    num = (prof.omega(t + h) - prof.omega(t - h)) / (2 * h)
    assert np.allclose(prof.eta(t), num, atol=1e-6)


def test_damped_eta_max_and_peak():
    prof = DampedSinusoid()
    assert prof.eta_max == pytest.approx(1.6 * math.pi)
    s = np.linspace(0, 60, 600001)
    assert np.max(np.abs(prof.eta(1 + s))) <= prof.eta_max + 1e-12
    t_pk, dev = prof.peak_deviation()
    assert t_pk == pytest.approx(1 + math.atan(2) / 0.2)
    assert t_pk == pytest.approx(6.54, abs=5e-3)
    assert dev == pytest.approx(12.92, abs=5e-3)


def test_tabulated_profile_integrals():
    prof = TabulatedRoCoF(W, (1.0, 2.0, 4.0), (0.0, -3.0, 0.0), 3.0)
    dev, _ = quad(lambda t: prof.omega(t) - W, 0.0, 5.0, points=[1.0, 2.0, 4.0], epsabs=1e-13)
    assert prof.phase(5.0) == pytest.approx(5.0 * W + dev, abs=1e-9)
    assert prof.omega(5.0) == pytest.approx(W - 4.5)
    assert prof.eta(0.5) == 0.0 and prof.eta(1.5) == pytest.approx(-1.5)


def test_tabulated_eta_max_enforced():
    with pytest.raises(ValueError):
        TabulatedRoCoF(W, (0.0, 1.0), (0.0, 5.0), 1.0)


def test_grid_validation_and_steps():
    with pytest.raises(ValueError):
        GridModel(V=0.0)
    with pytest.raises(ValueError):
        GridModel(phase_steps=((0.2, 0.1), (0.1, 0.1)))
    g = GridModel(phase_steps=((0.1, 0.2), (0.2, -0.5)))
    assert g.theta(0.1) == pytest.approx(W * 0.1 + 0.2)
    assert g.theta(0.25) == pytest.approx(W * 0.25 - 0.3)
