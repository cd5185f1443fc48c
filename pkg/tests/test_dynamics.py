import math

import numpy as np
import pytest
from scipy.linalg import expm

from gridpll.dynamics import (Event, IntegratorConfig, error_state, integrate, representation_equivalence,
                              simulate_closed_loop)
from gridpll.errors import IntegrationDivergedError
from gridpll.pll import PllState, atan_pll, srf_pll
from gridpll.signals import GAMMA, GridModel

W = 100 * math.pi
A = np.array([[-200.0, 1.0], [-1000.0, 0.0]])


def test_exponential_decay():
    tr = integrate(lambda t, x: -x, [1.0], IntegratorConfig(1e-3, 1.0))
    assert tr.times[-1] == 1.0
    assert tr.states[-1, 0] == pytest.approx(math.exp(-1.0), abs=1e-9)


def test_constant_field_is_exact():
    tr = integrate(lambda t, x: 0.0 * x, [0.5], IntegratorConfig(1e-3, 0.2))
    assert np.all(tr.states == 0.5)


def test_linear_atan_system_matches_expm():
    tr = integrate(lambda t, x: A @ x, [0.5, 0.0], IntegratorConfig(1e-5, 0.05))
    ref = expm(A * 0.05) @ np.array([0.5, 0.0])
    assert np.max(np.abs(tr.states[-1] - ref)) < 1e-6


def test_float_and_array_paths_agree():
    cfg = IntegratorConfig(1e-4, 0.05)
    single = integrate(lambda t, x: (-200 * x[0] + x[1], -1000 * x[0]), [0.5, 0.0], cfg, floats=True)
    batch = integrate(lambda t, x: np.stack([-200 * x[0] + x[1], -1000 * x[0]]),
                      np.array([[0.5, 0.5], [0.0, 0.0]]), cfg)
    assert np.array_equal(single.states, batch.states[:, :, 0])


def test_partial_last_step_lands_on_t_end():
    tr = integrate(lambda t, x: -x, [1.0], IntegratorConfig(0.03, 0.1))
    assert tr.end_time == 0.1
    assert tr.end_state[0] == pytest.approx(math.exp(-0.1), abs=1e-7)
    # rows follow floor(t_end / (dt * stride)) + 1
    assert len(tr) == math.floor(0.1 / 0.03) + 1


@pytest.mark.parametrize("dt, t_end, stride", [(1e-3, 1.0, 1), (1e-3, 1.0, 3), (1e-3, 0.5, 7), (2e-3, 0.3, 10)])
def test_row_count_rule(dt, t_end, stride):
    tr = integrate(lambda t, x: -x, [1.0], IntegratorConfig(dt, t_end, record_stride=stride))
    assert len(tr) == math.floor(t_end / (dt * stride) + 1e-9) + 1
    assert np.all(np.diff(tr.times) > 0)


def test_events_split_steps_and_add_samples():
    ev = [Event(0.0105, lambda x: x + 1.0, 1.0), Event(0.02, lambda x: x - 1.0, -1.0)]
    tr = integrate(lambda t, x: 0.0 * x, [0.0], IntegratorConfig(1e-3, 0.03), ev)
    assert len(tr) == 31 + 1  # one off-grid event sample
    assert 0.0105 in tr.times
    assert [e.extra_sample for e in tr.events] == [True, False]
    assert tr.events[0].state_after[0] - tr.events[0].state_before[0] == 1.0
    assert tr.states[-1, 0] == 0.0


def test_divergence_reports_last_valid_time():
    with pytest.raises(IntegrationDivergedError) as info:
        integrate(lambda t, x: x * x, [1.0], IntegratorConfig(1e-2, 2.0))
    # x' = x^2 blows up at t = 1; the discrete solution overflows shortly after
    assert 0.9 < info.value.last_valid_time < 1.1


def test_invalid_integrator_config():
    with pytest.raises(ValueError):
        IntegratorConfig(0.0, 1.0)
    with pytest.raises(ValueError):
        IntegratorConfig(1e-3, 1.0, method="Euler")
    with pytest.raises(ValueError):
        IntegratorConfig(1e-3, 1.0, record_stride=0)


@pytest.mark.parametrize("rep", ["polar", "dq"])
def test_equilibrium_is_constant(rep):
    g = GridModel()
    tr = simulate_closed_loop(g, atan_pll(200, 1000), rep, IntegratorConfig(1e-4, 0.1), error_state(g, 0.0, W))
    assert np.all(np.abs(tr.delta) <= 1e-12)
    assert np.all(tr.omega_hat == W)


def test_srf_exact_saddle_stays_put():
    g = GridModel()
    tr = simulate_closed_loop(g, srf_pll(200, 1000), "polar", IntegratorConfig(1e-5, 0.1),
                              error_state(g, math.pi, W))
    assert np.max(np.abs(tr.delta - math.pi)) < 1e-6
    assert np.max(np.abs(tr.omega_error)) < 1e-6


def test_atan_decay_from_one_radian():
    # the slow mode (about -5.13 1/s) still leaves |delta| ~ 1.6e-2 at 0.1 s; below 1e-3 by 1 s
    g = GridModel()
    tr = simulate_closed_loop(g, atan_pll(200, 1000), "polar", IntegratorConfig(1e-5, 1.0, record_stride=100),
                              error_state(g, 1.0, W))
    ref = expm(A * 0.1) @ np.array([1.0, 0.0])
    k = int(np.searchsorted(tr.times, 0.1))
    assert tr.delta[k] == pytest.approx(ref[0], abs=1e-9)
    assert abs(tr.delta[-1]) < 1e-3


def test_channels_and_energies():
    g = GridModel()
    cfg = srf_pll(200, 1000)
    tr = simulate_closed_loop(g, cfg, "dq", IntegratorConfig(1e-5, 0.02), error_state(g, 1.0, W + 5))
    n = len(tr)
    for ch in (tr.delta, tr.omega_hat, tr.u_hat, tr.y_tilde, tr.energies["H1"], tr.energies["W1"]):
        assert ch.shape == (n,)
    gv = GAMMA
    w1h = gv * (1 - np.cos(tr.delta)) + tr.omega_error**2 / 2000
    assert np.allclose(tr.energies["W1"], w1h, atol=1e-12)


def test_representation_equivalence_examples():
    g = GridModel()
    icfg = IntegratorConfig(1e-5, 1.0, record_stride=10)
    assert max(representation_equivalence(g, atan_pll(200, 1000), icfg, error_state(g, 0.0, W))) <= 1e-12
    d, _ = representation_equivalence(g, atan_pll(200, 1000), icfg, error_state(g, 1.0, W))
    assert d < 1e-6
    d, _ = representation_equivalence(g, srf_pll(200, 1000), icfg, error_state(g, 2.5, W + 30))
    assert d < 1e-5


def test_phase_step_jump_is_exact():
    g = GridModel(phase_steps=((0.05, 0.3), (0.0512345, -0.1)))
    cfg = atan_pll(200, 1000)
    for rep in ("polar", "dq"):
        tr = simulate_closed_loop(g, cfg, rep, IntegratorConfig(1e-5, 0.08), error_state(g, 0.0, W))
        (e1, e2) = tr.events
        if rep == "polar":
            assert e1.state_after[0] - e1.state_before[0] == -0.3
            assert e2.state_after[0] - e2.state_before[0] == 0.1
        k = int(np.searchsorted(tr.times, 0.05))
        jump = tr.delta[k] - tr.delta[k - 1]
        assert jump == pytest.approx(-0.3, abs=1e-5 * 200)


def test_dq_renormalisation_is_counted():
    g = GridModel()
    tr = simulate_closed_loop(g, srf_pll(200, 1000), "dq", IntegratorConfig(1e-3, 0.2),
                              error_state(g, 2.0, W + 40))
    assert tr.renormalizations >= 0
    assert np.allclose(np.hypot(tr.states[:, 0], tr.states[:, 1]), GAMMA, rtol=1e-9)


def test_amplitude_mismatch_rejected():
    with pytest.raises(ValueError):
        simulate_closed_loop(GridModel(V=2.0), atan_pll(1, 1), "polar", IntegratorConfig(1e-3, 0.01), PllState(0, W))


def test_determinism():
    g = GridModel()
    args = (g, srf_pll(200, 1000), "dq", IntegratorConfig(1e-5, 0.05), error_state(g, 2.0, W + 10))
    a = simulate_closed_loop(*args)
    b = simulate_closed_loop(*args)
    assert np.array_equal(a.states, b.states) and np.array_equal(a.times, b.times)
