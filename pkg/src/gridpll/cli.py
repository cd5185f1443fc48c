"""Command-line front end.

``gridpll <command> [config.yaml] [options]`` with the commands ``simulate``,
``portrait``, ``roa``, ``bound``, ``scenario`` and ``validate-config``.  Exit codes:
0 success, 2 configuration error, 3 numerical divergence, 4 infeasible analysis.
"""
from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from . import __version__
from .analysis import brute_force_minimum, roa_inner_estimate, roa_validate, ultimate_bound
from .analysis.bound import VARIANTS
from .config import RunConfig, load_config, parse_config
from .dynamics import IntegratorConfig, error_state, simulate_closed_loop
from .errors import ConfigError, InfeasibleError, IntegrationDivergedError
from .io import write_json, write_trajectory_csv
from .pll import Family, atan_pll
from .scenarios import SCENARIOS, builtin_scenario, run_scenario
from .signals import Constant, DampedSinusoid, GridModel, wrap_angle

log = logging.getLogger("gridpll")

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGED, EXIT_INFEASIBLE = 0, 2, 3, 4
COMMANDS = ("simulate", "portrait", "roa", "bound", "scenario", "validate-config")


def _override(cfg: RunConfig, args, section):
    """Apply command-line overrides and re-validate."""
    data = cfg.model_dump()
    if args.seed is not None:
        data["seed"] = args.seed
    if args.out_dir is not None:
        data["out_dir"] = args.out_dir
    for flag, key in (("dt", "dt"), ("t_end", "t_end")):
        val = getattr(args, flag)
        if val is not None:
            if data.get(section) is None:
                raise ConfigError([f"--{flag.replace('_', '-')}: no [{section}] settings to override"])
            data[section][key] = val
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError([f"override {'.'.join(map(str, e['loc']))}: {e['msg']}" for e in exc.errors()]) from None


def _load(args, section="integrator"):
    cfg = load_config(args.config) if args.config else parse_config("", "<defaults>")
    return _override(cfg, args, section)


# --------------------------------------------------------------------------- commands


def cmd_simulate(cfg: RunConfig):
    grid, pll = cfg.grid_model(), cfg.pll_config()
    x0 = error_state(grid, cfg.initial.delta, grid.omega(0.0) + cfg.initial.omega_error)
    traj = simulate_closed_loop(grid, pll, cfg.representation, cfg.integrator.build(), x0)
    path = write_trajectory_csv(Path(cfg.out_dir) / "trajectory.csv", traj, pll)
    print(f"wrote {path} ({len(traj)} rows); final delta={float(traj.end_delta):.6g} rad, "
          f"omega_hat={float(traj.end_omega_hat):.9g} rad/s")
    return path


def classify_final(delta, omega_error, angle_tol, omega_tol):
    """Equilibrium index ``h`` reached by a run, ``"saddle"`` for odd ``h`` or ``"unconverged"``."""
    h = int(round(delta / math.pi))
    if abs(delta - h * math.pi) < angle_tol and abs(omega_error) < omega_tol:
        return h if h % 2 == 0 else "saddle"
    return "unconverged"


def cmd_portrait(cfg: RunConfig):
    grid, pll = cfg.grid_model(), cfg.pll_config()
    icfg = cfg.integrator.build()
    p = cfg.portrait
    out = Path(cfg.out_dir) / "portrait"
    deltas = np.linspace(p.delta.min, p.delta.max, p.delta.count)
    errors = np.linspace(p.omega_error.min, p.omega_error.max, p.omega_error.count)
    rows = []
    for i, (d0, w0) in enumerate((d, w) for d in deltas for w in errors):
        name = f"ic_{i:04d}.csv"
        x0 = error_state(grid, float(d0), grid.omega(0.0) + float(w0))
        try:
            traj = simulate_closed_loop(grid, pll, cfg.representation, icfg, x0)
        except IntegrationDivergedError as exc:
            log.warning("IC %d diverged: %s", i, exc)
            rows.append({"index": i, "delta0": float(d0), "omega_error0": float(w0), "result": "diverged",
                         "file": None})
            continue
        write_trajectory_csv(out / name, traj, pll)
        w_end = float(traj.end_omega_hat) - float(grid.omega(traj.end_time))
        rows.append({"index": i, "delta0": float(d0), "omega_error0": float(w0),
                     "result": classify_final(float(traj.end_delta), w_end, p.angle_tol, p.omega_tol),
                     "file": name})
    path = write_json(out / "portrait.json", {"family": pll.family.value, "kp": pll.kp, "ki": pll.ki,
                                              "representation": cfg.representation, "t_end": icfg.t_end,
                                              "initial_conditions": rows})
    print(f"wrote {path} ({len(rows)} initial conditions)")
    return path


def cmd_roa(cfg: RunConfig):
    pll = cfg.pll_config()
    r = cfg.roa
    est = roa_inner_estimate(pll.family, r.h, (pll.kp, pll.ki), pll.gamma_v, r.kind)
    box = est.bounding_box()
    payload = {
        "estimate": {
            "family": est.family.value, "h": est.h, "kind": est.kind, "level": est.level,
            "gamma_v": est.gamma_v, "ki": est.ki, "omega": est.omega,
            "omega_extent": est.omega_extent(), "bounding_box": [list(box[0]), list(box[1])],
        },
        "validation": None,
    }
    if est.family is Family.GSRF:
        # the angle term 1 - cos(u) never exceeds 2, so the angle condition is void when level > 2
        payload["estimate"]["delta_condition_vacuous"] = bool(
            (est.level > 2.0) if r.kind == "as-printed" else (est.level > 2.0 * est.gamma_v))
    if r.n > 0:
        frac = roa_validate(est, pll, r.n, seed=cfg.seed, t_end=r.t_end, dt=r.dt)
        payload["validation"] = {"n": r.n, "seed": cfg.seed, "t_end": r.t_end, "dt": r.dt, "fraction": frac}
    path = write_json(Path(cfg.out_dir) / "roa.json", payload)
    frac_txt = "skipped" if payload["validation"] is None else f"{payload['validation']['fraction']:.6g}"
    print(f"wrote {path}; level={est.level:.9g}, validation fraction: {frac_txt}")
    return path


def empirical_limsup(grid, kp, ki, window=(30.0, 60.0), dt=1e-4):
    """``max |(delta, omega_tilde/ki)|`` of the ATAN loop over ``window`` (seconds)."""
    pll = atan_pll(kp, ki, grid.V)
    icfg = IntegratorConfig(dt, window[1], record_stride=1)
    traj = simulate_closed_loop(grid, pll, "polar", icfg, error_state(grid, 0.0, grid.omega(0.0)))
    m = traj.times >= window[0]
    return float(np.max(np.hypot(wrap_angle(traj.delta[m]), traj.omega_error[m] / ki)))


def cmd_bound(cfg: RunConfig, empirical=False):
    grid = cfg.grid_model()
    kp, ki = cfg.pll.kp, cfg.pll.ki
    b = cfg.bound
    eta_max = b.eta_max if b.eta_max is not None else grid.profile.eta_max
    variants = VARIANTS if b.variant == "both" else (b.variant,)
    payload = {"kp": kp, "ki": ki, "eta_max": eta_max, "variants": {}}
    for v in variants:
        ub = ultimate_bound(kp, ki, eta_max, v, b.grid_points)
        eps_bf, f_bf = brute_force_minimum(kp, ki, v)
        entry = ub.as_dict()
        factor = ub.bound / eta_max if eta_max > 0 else None
        entry["oracle"] = {"points": 1_000_000, "epsilon": eps_bf, "factor": f_bf,
                           "relative_difference": None if factor is None else abs(factor - f_bf) / f_bf}
        payload["variants"][v] = entry
    if empirical:
        egrid = grid if not isinstance(grid.profile, Constant) else GridModel(grid.V, 0.0, DampedSinusoid())
        limsup = empirical_limsup(egrid, kp, ki, tuple(b.window))
        derived = ultimate_bound(kp, ki, egrid.profile.eta_max, "derived-khalil", b.grid_points)
        payload["empirical"] = {"window": list(b.window), "limsup": limsup, "eta_max": egrid.profile.eta_max,
                                "derived_bound": derived.bound, "sound": bool(derived.bound >= limsup)}
    path = write_json(Path(cfg.out_dir) / "bound.json", payload)
    print(f"wrote {path}; " + ", ".join(f"{v}: bound={e['bound']:.6g} at eps={e['epsilon_star']:.6g}"
                                         for v, e in payload["variants"].items()))
    return path


def cmd_scenario(cfg: RunConfig):
    sc = cfg.scenario
    scenario = builtin_scenario(sc.name, sc.jumps, sc.dt, sc.t_end, sc.record_stride)
    report = run_scenario(scenario)
    out = Path(cfg.out_dir) / sc.name
    cfgs = dict(scenario.plls)
    for label, traj in report.trajectories.items():
        write_trajectory_csv(out / f"{label}.csv", traj, cfgs[label])
    path = write_json(out / "report.json", report.as_dict())
    for label, summary in report.labels.items():
        print(f"{label}: settling {summary.settling_times}, final omega error {summary.final_omega_error:.3g} rad/s")
    print(f"wrote {path}")
    return path


# --------------------------------------------------------------------------- entry point


def build_parser():
    ap = argparse.ArgumentParser(prog="gridpll", description="Simulate and certify SRF/ATAN phase-locked loops.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        if name == "scenario":
            p.add_argument("target", help=f"built-in scenario ({', '.join(SCENARIOS)}) or a config file")
        else:
            p.add_argument("config", nargs="?" if name != "validate-config" else None, help="YAML run configuration")
        p.add_argument("--seed", type=int)
        p.add_argument("--out-dir")
        p.add_argument("--dt", type=float)
        p.add_argument("--t-end", type=float)
        p.add_argument("--empirical", action="store_true", help="bound: also simulate the empirical limsup")
        p.add_argument("-v", "--verbose", action="count", default=0)
    return ap


def _run(args):
    if args.command == "validate-config":
        load_config(args.config)
        print(f"ok: {args.config}")
        return None
    if args.command == "scenario":
        target = Path(args.target)
        if target.is_file():
            args.config = str(target)
            cfg = load_config(target)
            if cfg.scenario is None:
                raise ConfigError([f"{target}: scenario: section is required"])
        elif args.target in SCENARIOS:
            args.config = None
            cfg = parse_config(f"scenario:\n  name: {args.target}\n", "<builtin>")
        else:
            raise ConfigError([f"unknown scenario {args.target!r}; choose from {', '.join(SCENARIOS)} or give a file"])
        cfg = _override(cfg, argparse.Namespace(**{**vars(args), "config": None}), "scenario")
        return cmd_scenario(cfg)
    section = "roa" if args.command == "roa" else "integrator"
    cfg = _load(args, section)
    if args.command == "simulate":
        return cmd_simulate(cfg)
    if args.command == "portrait":
        return cmd_portrait(cfg)
    if args.command == "roa":
        return cmd_roa(cfg)
    return cmd_bound(cfg, args.empirical)


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        _run(args)
    except ConfigError as exc:
        for p in exc.problems:
            print(f"config error: {p}", file=sys.stderr)
        return EXIT_CONFIG
    except IntegrationDivergedError as exc:
        print(f"diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except InfeasibleError as exc:
        print(f"infeasible: {exc} (constraint: {exc.constraint})", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
