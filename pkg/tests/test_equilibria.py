import math

import numpy as np
import pytest
from scipy.linalg import expm

from gridpll.analysis import EquilibriumClass, atan_linear_solution, classify_equilibrium
from gridpll.pll import Family, PllConfig, Saturation, adaptive_gain_phi, atan_pll, srf_pll
from gridpll.signals import GAMMA

G = GAMMA


def test_srf_origin_is_stable():
    r = classify_equilibrium(srf_pll(200, 1000), 0.0, G)
    assert r.det == pytest.approx(1000 * G)
    assert r.trace < 0
    assert r.cls is EquilibriumClass.STABLE


def test_srf_pi_is_saddle():
    r = classify_equilibrium(srf_pll(200, 1000), math.pi, G)
    assert r.det == pytest.approx(-1000 * G)
    assert r.cls is EquilibriumClass.SADDLE
    lam = sorted(e.real for e in r.eigenvalues)
    assert lam[0] < 0 < lam[1]


def test_atan_origin_eigenvalues():
    r = classify_equilibrium(atan_pll(200, 1000), 0.0)
    lam = sorted(e.real for e in r.eigenvalues)
    assert lam == pytest.approx([-194.87, -5.13], abs=5e-3)
    assert r.cls is EquilibriumClass.STABLE
    assert np.allclose(r.jacobian, [[-200, 1], [-1000, 0]])


def test_non_equilibrium_rejected():
    with pytest.raises(ValueError):
        classify_equilibrium(srf_pll(200, 1000), 0.5)
    with pytest.raises(ValueError):
        classify_equilibrium(atan_pll(200, 1000), math.pi)


def test_generalised_phi_uses_slope_at_zero():
    r = classify_equilibrium(PllConfig(Family.GATAN, 200, 1000, adaptive_gain_phi()), 2 * math.pi)
    assert r.jacobian[0, 0] == pytest.approx(-2000)
    r = classify_equilibrium(PllConfig(Family.GSRF, 10, 10, Saturation(3, 1)), 3 * math.pi)
    assert r.cls is EquilibriumClass.SADDLE


def test_eigenvalues_match_numpy():
    r = classify_equilibrium(srf_pll(37, 911), -2 * math.pi)
    assert sorted(np.round(np.array(r.eigenvalues), 9), key=lambda z: (z.real, z.imag)) == \
        sorted(np.round(np.linalg.eigvals(r.jacobian), 9), key=lambda z: (z.real, z.imag))


def _expm_solution(kp, ki, x0, t):
    return expm(np.array([[-kp, 1.0], [-ki, 0.0]]) * t) @ np.asarray(x0, dtype=float)


def test_linear_solution_zero():
    s = atan_linear_solution(200, 1000, (0.0, 0.0), np.linspace(0, 1, 5))
    assert np.all(s.delta == 0) and np.all(s.omega_tilde == 0) and s.in_interval


@pytest.mark.parametrize("kp, ki", [(200, 1000), (2, 1), (1, 50), (5, 6.25)])
def test_linear_solution_matches_expm(kp, ki):
    x0 = (0.5, -0.3)
    for t in (0.0, 0.01, 0.05, 0.7, 3.0):
        s = atan_linear_solution(kp, ki, x0, t)
        assert (s.delta, s.omega_tilde) == pytest.approx(tuple(_expm_solution(kp, ki, x0, t)), abs=1e-12, rel=1e-10)


def test_confluent_case_is_jordan_form():
    s = atan_linear_solution(2, 1, (1.0, 0.0), 1.0)
    # A = [[-2, 1], [-1, 0]], repeated root -1: delta(t) = e^{-t}(1 - t)
    assert s.delta == pytest.approx(0.0, abs=1e-15)
    assert s.omega_tilde == pytest.approx(-math.exp(-1.0))


def test_interval_exit_flagged():
    s = atan_linear_solution(200, 1000, (0.5, 2000.0), 0.05)
    assert not s.in_interval
    assert atan_linear_solution(200, 1000, (0.5, 0.0), 0.05).in_interval
