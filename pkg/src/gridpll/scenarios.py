"""Named benchmark experiments: repeated phase steps and a low-inertia frequency swing."""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .analysis.settling import settling_time
from .dynamics import IntegratorConfig, Trajectory, error_state, simulate_closed_loop
from .errors import IntegrationDivergedError, InfeasibleTransferError
from .pll import Family, PllConfig, adaptive_gain_phi, atan_pll, srf_pll
from .signals import Constant, DampedSinusoid, GridModel, NOMINAL_OMEGA, wrap_angle

log = logging.getLogger(__name__)

SCENARIOS = ("high-inertia-steps", "low-inertia-disturbance")
DEFAULT_JUMPS = (0.2, -0.2, 0.4, -0.4, 0.2)
V_NOM = 320e3  # base of the per-unit amplitude, V
L_GRID = 32.60e-3  # grid inductance, H


@dataclass(frozen=True)
class Scenario:
    name: str
    grid: GridModel
    plls: Tuple[Tuple[str, PllConfig], ...]
    integrator: IntegratorConfig
    bands: Tuple[Tuple[str, float], ...] = (("omega_err", 0.05),)
    representation: str = "polar"
    delta0: float = 0.0

    def __post_init__(self):
        labels = [lab for lab, _ in self.plls]
        if not labels:
            raise ValueError("a scenario needs at least one PLL")
        if len(set(labels)) != len(labels):
            raise ValueError("PLL labels must be unique")


@dataclass
class LabelSummary:
    label: str
    family: str
    kp: float
    ki: float
    settling_times: Dict[str, Optional[float]]
    final_delta: float
    final_omega_hat: float
    final_omega_error: float
    lyapunov_nonincreasing: bool
    max_lyapunov_increase: float
    pre_step_abs_delta: List[float]


@dataclass
class ScenarioReport:
    name: str
    labels: Dict[str, LabelSummary]
    max_frequency_deviation: Dict[str, float]
    trajectories: Dict[str, Trajectory] = field(default_factory=dict, repr=False)

    def as_dict(self):
        return {
            "scenario": self.name,
            "labels": {k: vars(v) for k, v in self.labels.items()},
            "max_frequency_deviation": dict(self.max_frequency_deviation),
        }


def builtin_scenario(name, jumps=None, dt=None, t_end=None, record_stride=None) -> Scenario:
    """Return one of the packaged experiments.

    ``high-inertia-steps``
        Per-unit grid at a constant 50 Hz with phase steps every 0.1 s up to 0.5 s
        (``jumps`` rad, default ``(0.2, -0.2, 0.4, -0.4, 0.2)``), tracked by ATAN loops with
        ``kp = 200`` and ``2000`` and a gATAN loop with an adaptive-gain phi; ``ki = 1000``.
    ``low-inertia-disturbance``
        50 Hz until 1 s, then the damped swing ``-8 pi exp(-0.1 s) sin(0.2 s)`` rad/s for
        60 s, tracked by the SRF and ATAN loops with ``kp = 200``, ``ki = 1000``.
    """
    if name == "high-inertia-steps":
        jumps = DEFAULT_JUMPS if jumps is None else tuple(float(j) for j in jumps)
        steps = tuple((round(0.1 * (i + 1), 12), j) for i, j in enumerate(jumps))
        grid = GridModel(1.0, 0.0, Constant(NOMINAL_OMEGA), steps)
        plls = (
            ("ATAN-PLL1", atan_pll(200.0, 1e3)),
            ("ATAN-PLL10", atan_pll(2000.0, 1e3)),
            ("gATAN-PLL", PllConfig(Family.GATAN, 200.0, 1e3, adaptive_gain_phi())),
        )
        icfg = IntegratorConfig(dt or 1e-5, t_end or 0.6, record_stride=record_stride or 10)
        return Scenario(name, grid, plls, icfg)
    if name == "low-inertia-disturbance":
        if jumps:
            raise ValueError("the low-inertia scenario has no phase steps")
        grid = GridModel(1.0, 0.0, DampedSinusoid())
        plls = (("SRF-PLL", srf_pll(200.0, 1e3)), ("ATAN-PLL", atan_pll(200.0, 1e3)))
        icfg = IntegratorConfig(dt or 1e-4, t_end or 60.0, record_stride=record_stride or 10)
        return Scenario(name, grid, plls, icfg)
    raise KeyError(f"unknown scenario {name!r}; choose from {SCENARIOS}")


def _energy_name(cfg):
    return "W1" if cfg.is_srf else "W2"


def _summarise(label, cfg, traj, scenario):
    energy = traj.energies[_energy_name(cfg)]
    inc = np.diff(energy)
    # a phase step moves the state discontinuously; skip the increment that straddles it
    for ev in traj.events:
        k = int(np.searchsorted(traj.times, ev.time, side="left"))
        if k > 0:
            inc[k - 1] = 0.0
    worst = float(np.max(inc, initial=0.0))
    settle = {ch: settling_time(traj, ch, band) for ch, band in scenario.bands}
    return LabelSummary(
        label=label,
        family=cfg.family.value,
        kp=cfg.kp,
        ki=cfg.ki,
        settling_times=settle,
        final_delta=float(traj.delta[-1]),
        final_omega_hat=float(traj.omega_hat[-1]),
        final_omega_error=float(traj.omega_error[-1]),
        lyapunov_nonincreasing=worst <= 1e-9,
        max_lyapunov_increase=worst,
        pre_step_abs_delta=[abs(wrap_angle(float(ev.state_before[0]))) for ev in traj.events],
    )


def run_scenario(s: Scenario) -> ScenarioReport:
    """Simulate every labelled PLL and summarise the runs.

    Labels run one after another; each run is deterministic, so the report does not
    depend on the order.

    Raises
    ------
    IntegrationDivergedError
        With the offending label in the message.
    """
    x0 = error_state(s.grid, s.delta0, s.grid.omega(0.0))
    trajs, labels = {}, {}
    for label, cfg in s.plls:
        log.info("scenario %s: simulating %s", s.name, label)
        try:
            traj = simulate_closed_loop(s.grid, cfg, s.representation, s.integrator, x0)
        except IntegrationDivergedError as exc:
            raise IntegrationDivergedError(exc.last_valid_time, f"{label}: {exc}") from exc
        trajs[label] = traj
        labels[label] = _summarise(label, cfg, traj, s)
    dev = {}
    for a, b in itertools.combinations(trajs, 2):
        dev[f"{a}|{b}"] = float(np.max(np.abs(trajs[a].omega_hat - trajs[b].omega_hat)))
    return ScenarioReport(s.name, labels, dev, trajs)


def power_step_to_phase_step(delta_P, X_g, V):
    """Load angle ``arcsin(2 X_g delta_P / (3 V^2))`` for a power step.

    Uses ``P = 3 V^2 sin(phi) / (2 X_g)`` with ``V`` the peak phase voltage (V), ``X_g``
    the grid reactance (ohm) and ``delta_P`` in W.

    Raises
    ------
    InfeasibleTransferError
        If the step exceeds the maximum transferable power ``3 V^2 / (2 X_g)``.
    """
    if not (X_g > 0 and V > 0):
        raise ValueError("X_g and V must be positive")
    s = 2.0 * X_g * delta_P / (3.0 * V * V)
    if abs(s) > 1.0:
        raise InfeasibleTransferError("|2 X_g dP / (3 V^2)| <= 1",
                                      f"power step {delta_P:g} W exceeds the transfer limit")
    return math.asin(s)
