import math

import numpy as np
import pytest

from gridpll.analysis import brute_force_minimum, ultimate_bound
from gridpll.analysis.bound import bound_factor, eps_window, sym_eig2
from gridpll.errors import InfeasibleError

ETA = 1.6 * math.pi


@pytest.mark.parametrize("variant", ["as-printed", "derived-khalil"])
def test_zero_disturbance_gives_zero_bound(variant):
    b = ultimate_bound(200, 1000, 0.0, variant)
    assert b.bound == 0.0
    assert 0 < b.epsilon_star < b.eps_max


def test_feasibility_windows_closed_form():
    assert eps_window(200, 1000, "as-printed") == pytest.approx(min(2 * math.sqrt(1000), 200 / (1000 + 1e4)))
    assert eps_window(200, 1000, "derived-khalil") == pytest.approx(200 * 1000 / (1000 + 1e4))
    for variant in ("as-printed", "derived-khalil"):
        e_max = eps_window(200, 1000, variant)
        assert math.isfinite(bound_factor(200, 1000, 0.999 * e_max, variant))
        assert bound_factor(200, 1000, 1.001 * e_max, variant) == math.inf


def test_as_printed_positive_definiteness():
    e = np.linspace(1e-4, 0.0181, 50)
    pmin, _ = sym_eig2(1.0, -e / 2, 1000.0)
    qmin, _ = sym_eig2(200 - e * 1000, -e * 100, e)
    assert np.all(pmin > 0) and np.all(qmin > 0)
    assert np.all(e**2 < 4 * 1000)


def test_sym_eig2_matches_numpy():
    rng = np.random.Generator(np.random.Philox(1))
    for _ in range(50):
        a, b, c = rng.normal(size=3) * 10
        lo, hi = sym_eig2(a, b, c)
        assert (lo, hi) == pytest.approx(tuple(np.linalg.eigvalsh([[a, b], [b, c]])), abs=1e-12)


@pytest.mark.parametrize("variant", ["as-printed", "derived-khalil"])
def test_golden_section_matches_brute_force(variant):
    b = ultimate_bound(200, 1000, ETA, variant)
    eps_bf, f_bf = brute_force_minimum(200, 1000, variant)
    assert b.bound == pytest.approx(f_bf * ETA, rel=1e-6)
    assert b.bound <= f_bf * ETA * (1 + 1e-12)
    assert b.epsilon_star == pytest.approx(eps_bf, rel=1e-4)


def test_derived_bound_values():
    b = ultimate_bound(200, 1000, ETA, "derived-khalil")
    assert b.lambda_min_P > 0 and b.lambda_min_Q > 0
    assert b.bound == pytest.approx(0.8282, abs=1e-4)
    assert b.within_interval


def test_bound_linear_in_eta():
    a = ultimate_bound(50, 400, 1.0)
    b = ultimate_bound(50, 400, 3.0)
    assert b.bound == pytest.approx(3 * a.bound)
    assert a.epsilon_star == b.epsilon_star


def test_invalid_inputs():
    with pytest.raises(InfeasibleError):
        ultimate_bound(-1, 1000, 1.0)
    with pytest.raises(ValueError):
        ultimate_bound(1, 1, -1.0)
    with pytest.raises(ValueError):
        ultimate_bound(1, 1, 1.0, "other")
