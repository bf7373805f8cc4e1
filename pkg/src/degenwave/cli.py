# degenwave/cli.py

"""Command-line driver.

Every subcommand resolves its parameters (defaults, then ``--config``, then
flags), runs one computation, writes its tables and a ``manifest.json`` under
``--out`` and prints a short summary. Exit codes: 0 success, 2 domain error,
3 numerical or output failure, 64 usage error.
"""
import argparse
import logging
import math
import sys
import time
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .config import ResolvedConfig, apply_overrides, load_config
from .conjecture_lab import conjecture_scan
from .errors import (
    BelowMinimalSpeedError,
    DegenerateMapError,
    DomainError,
    FrontNotFoundError,
    NumericalError,
    OutputError,
)
from .model_core import ModelParams
from .outputs import (
    ALPHA_SCAN_HEADER,
    COMPARISON_HEADER,
    CONJECTURE_HEADER,
    FRONT_HEADER,
    SNAPSHOT_HEADER,
    SWEEP_HEADER,
    TRAJECTORY_HEADER,
    RunManifest,
    Table,
    write_outputs,
)
from .pde_simulator import PdeState, run, speed_sweep, track_front
from .shooting import (
    ShootConfig,
    ShootKind,
    ShootOutcome,
    classify_trajectory,
    find_alpha0,
    find_alpha1,
    find_alpha_for_mbar,
    min_speed_search,
    scan_alpha,
    seed_robustness,
)
from .utils import to_jsonable, worker_count
from .wave_reconstruction import (
    WaveProfile,
    compare_profiles,
    desingularised_to_physical,
    extend_profile,
    profile_from_pde,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_DOMAIN = 2
EXIT_NUMERICAL = 3
EXIT_USAGE = 64

LOG_FORMAT = "%(asctime)s [%(levelname)s] %(message)s"

# command -> (tables, profiles, results)
CommandResult = Tuple[Dict[str, Table], Dict[str, WaveProfile], Dict[str, Any]]


class UsageErrorParser(argparse.ArgumentParser):
    """ArgumentParser that exits with status 64 on usage errors"""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _float_list(text: str) -> List[float]:
    try:
        values = [float(item) for item in text.split(",") if item.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'")
    if not values:
        raise argparse.ArgumentTypeError("expected at least one number")
    return values


def _require(value: Optional[float], flag: str) -> float:
    if value is None:
        raise DomainError(f"{flag} is required (flag or config file)")
    return value


def _trajectory_table(outcome: ShootOutcome) -> Table:
    traj = outcome.trajectory
    return Table(TRAJECTORY_HEADER, [(y, *state) for y, state in zip(traj.ys, traj.states)])


def _profile_or_none(outcome: ShootOutcome) -> Optional[WaveProfile]:
    try:
        return desingularised_to_physical(outcome.trajectory, ModelParams(outcome.kappa, outcome.c))
    except (DegenerateMapError, FrontNotFoundError) as e:
        logger.warning(f"No physical profile for this shot: {e}")
        return None


def _outcome_results(outcome: ShootOutcome) -> Dict[str, Any]:
    return {
        "kind": outcome.kind.value,
        "T": outcome.T,
        "n_inf": outcome.n_inf,
        "p_inf": outcome.p_inf,
        "m_inf": outcome.m_inf,
        "confined": outcome.confined,
    }


def cmd_shoot(args: argparse.Namespace, cfg: ResolvedConfig) -> CommandResult:
    c = _require(cfg.model.c, "--c")
    alpha = _require(cfg.model.alpha, "--alpha")
    outcome = classify_trajectory(alpha, c, cfg.model.kappa, cfg.shoot_config())
    print(f"{outcome.kind.value} T={outcome.T:.6g} n_inf={outcome.n_inf:.6g} m_inf={outcome.m_inf:.6g}")
    profiles = {}
    profile = _profile_or_none(outcome)
    if profile is not None:
        profiles["profile.csv"] = profile
    return {"trajectory.csv": _trajectory_table(outcome)}, profiles, _outcome_results(outcome)


def cmd_alpha1(args: argparse.Namespace, cfg: ResolvedConfig) -> CommandResult:
    c = _require(cfg.model.c, "--c")
    results: Dict[str, Any] = {}
    if args.check_seed:
        check = seed_robustness(c, cfg.model.kappa, cfg.shoot_config())
        bracket = check.bracket
        results["seed_check"] = {
            "alpha1_half_seed": check.alpha1_half_seed,
            "difference": check.difference,
            "tolerance": check.tolerance,
            "passed": check.passed,
        }
        print(f"seed check: alpha1 moves by {check.difference:.3g} when seed_epsilon is halved")
    else:
        bracket = find_alpha1(c, cfg.model.kappa, cfg.shoot_config())
    print(f"{bracket.value:.8g}")
    results.update({"alpha1": bracket.value, "lower": bracket.lower, "upper": bracket.upper})
    return {}, {}, results


def cmd_alpha0(args: argparse.Namespace, cfg: ResolvedConfig) -> CommandResult:
    c = _require(cfg.model.c, "--c")
    bracket = find_alpha0(c, cfg.model.kappa, cfg.shoot_config())
    print(f"{bracket.value:.8g}")
    return {}, {}, {"alpha0": bracket.value, "lower": bracket.lower, "upper": bracket.upper}


def cmd_alpha_for_mbar(args: argparse.Namespace, cfg: ResolvedConfig) -> CommandResult:
    c = _require(cfg.model.c, "--c")
    result = find_alpha_for_mbar(c, cfg.model.kappa, cfg.model.m_bar, cfg.shoot_config())
    print(f"{result.alpha:.8g}")
    profiles = {}
    profile = _profile_or_none(result.outcome)
    if profile is not None:
        profiles["profile.csv"] = profile
    results = {"alpha": result.alpha, "lower": result.lower, "upper": result.upper}
    results.update(_outcome_results(result.outcome))
    return {"trajectory.csv": _trajectory_table(result.outcome)}, profiles, results


def cmd_min_speed(args: argparse.Namespace, cfg: ResolvedConfig) -> CommandResult:
    result = min_speed_search(cfg.model.kappa, cfg.model.m_bar, cfg.shoot_config(), numeric=args.numeric)
    print(f"{result.c_star:.6g}")
    return {}, {}, {
        "c_star": result.c_star,
        "lower": result.lower,
        "upper": result.upper,
        "method": result.method,
        "formula_lower": result.formula.lower,
        "formula_upper": result.formula.upper,
        "formula_exact": result.formula.exact,
        "agrees_with_formula": result.agrees_with_formula,
    }


def _snapshot_tables(states: Sequence[PdeState], which: str) -> Dict[str, Table]:
    if which == "none" or not states:
        return {}
    chosen = list(enumerate(states)) if which == "all" else [(len(states) - 1, states[-1])]
    return {
        f"snapshot_{i:04d}.csv": Table(SNAPSHOT_HEADER, list(zip(s.x, s.N, s.M)))
        for i, s in chosen
    }


def _front_table(times: Sequence[float], positions: Sequence[float]) -> Table:
    return Table(FRONT_HEADER, list(zip(times, positions)))


def cmd_pde_run(args: argparse.Namespace, cfg: ResolvedConfig) -> CommandResult:
    states = run(cfg.pde_config())
    track = track_front(states)
    fit = track.speed_fit
    print(f"speed={fit.slope:.6g} residual={fit.residual:.3g}")
    tables = {"front.csv": _front_table(track.times, track.positions)}
    tables.update(_snapshot_tables(states, args.snapshots))
    return tables, {}, {"speed": fit.slope, "intercept": fit.intercept, "residual": fit.residual}


def _workers(cfg: ResolvedConfig) -> int:
    return worker_count(cfg.sweep.workers)


def cmd_speed_sweep(args: argparse.Namespace, cfg: ResolvedConfig) -> CommandResult:
    records = speed_sweep(cfg.sweep.kappa_list, cfg.sweep.m_bar_list, cfg.pde_config(), workers=_workers(cfg))
    table = Table(SWEEP_HEADER)
    for r in records:
        table.add(r.kappa, r.M_bar, r.speed, r.fit_residual, r.status)
    failed = sum(r.status != "ok" for r in records)
    print(f"{len(records)} cells, {failed} failed")
    return {"sweep.csv": table}, {}, {"cells": len(records), "failed": failed}


def _ode_outcome_at_speed(c: float, kappa: float, m_bar: float, shoot_cfg: ShootConfig) -> ShootOutcome:
    """Shot connecting (1, 0, 0) to the far field m_bar at speed c"""
    if m_bar == 0.0:
        return classify_trajectory(0.0, c, kappa, shoot_cfg)
    if m_bar >= 1.0:
        bracket = find_alpha1(c, kappa, shoot_cfg)
        return classify_trajectory(bracket.upper, c, kappa, shoot_cfg)
    return find_alpha_for_mbar(c, kappa, m_bar, shoot_cfg).outcome


def ode_wave_near_speed(
    c_pde: float, kappa: float, m_bar: float, shoot_cfg: ShootConfig, attempts: int = 6
) -> Tuple[float, ShootOutcome, bool]:
    """ODE wave at the measured PDE speed, or at the nearest speed where one exists.

    A measured speed below 2 sqrt(1 - m_bar) is raised to that bound, and a
    speed the shooting search rejects is raised by 0.5% per attempt.

    Returns:
        (c_ode, outcome, clamped) where clamped says c_ode differs from c_pde.
    """
    lower = 2.0 * math.sqrt(1.0 - m_bar) if m_bar < 1.0 else 0.0
    c_ode = c_pde
    if c_ode < lower:
        logger.warning(f"PDE speed {c_pde:.6g} is below the minimal speed bound {lower:.6g}; using the bound")
        c_ode = lower
    for attempt in range(attempts):
        try:
            outcome = _ode_outcome_at_speed(c_ode, kappa, m_bar, shoot_cfg)
            break
        except BelowMinimalSpeedError as e:
            if attempt == attempts - 1:
                raise
            logger.warning(f"No wave at c={c_ode:.6g} ({e}); raising the speed by 0.5%")
            c_ode *= 1.005
    return c_ode, outcome, c_ode != c_pde


def cmd_compare(args: argparse.Namespace, cfg: ResolvedConfig) -> CommandResult:
    kappa, m_bar = cfg.model.kappa, cfg.model.m_bar
    states = run(cfg.pde_config())
    track = track_front(states)
    c_pde = track.speed_fit.slope
    if not c_pde > 0:
        raise NumericalError(f"PDE front does not advance (speed {c_pde:.6g})")

    c_ode, outcome, clamped = ode_wave_near_speed(c_pde, kappa, m_bar, cfg.shoot_config())
    params = ModelParams(kappa, c_ode, min(m_bar, 1.0))
    ode_profile = desingularised_to_physical(outcome.trajectory, params)
    last = states[-1]
    pde_profile = profile_from_pde(last.x, last.N, last.M, speed=c_pde, front_position=track.positions[-1])
    try:
        ode_profile = extend_profile(
            ode_profile, outcome.trajectory, params,
            xi_min=float(pde_profile.xi[0]), xi_max=float(pde_profile.xi[-1]),
        )
    except DomainError as e:
        logger.warning(f"Comparing on the integrated range only: {e}")
    metrics = compare_profiles(ode_profile, pde_profile)
    print(
        f"sup_norm_N={metrics['sup_norm_N']:.4g} sup_norm_M={metrics['sup_norm_M']:.4g} "
        f"c_pde={c_pde:.6g} c_ode={c_ode:.6g}{' (clamped)' if clamped else ''}"
    )
    comparison = Table(COMPARISON_HEADER)
    comparison.add(metrics["sup_norm_N"], metrics["sup_norm_M"], metrics["optimal_shift"], c_pde, c_ode, clamped)
    tables = {
        "comparison.csv": comparison,
        "front.csv": _front_table(track.times, track.positions),
    }
    profiles = {"profile_ode.csv": ode_profile, "profile_pde.csv": pde_profile}
    results = dict(metrics)
    results.update({"c_pde": c_pde, "c_ode": c_ode, "clamped": clamped, "ode_kind": outcome.kind.value})
    return tables, profiles, results


def cmd_conjecture_scan(args: argparse.Namespace, cfg: ResolvedConfig) -> CommandResult:
    verdicts = conjecture_scan(
        cfg.sweep.kappa_list, cfg.sweep.m_bar_list,
        branch=cfg.sweep.branch, samples=args.samples, workers=_workers(cfg),
    )
    table = Table(CONJECTURE_HEADER)
    for v in verdicts:
        table.add(v.kappa, v.m_bar, v.c, v.branch, v.g_kpp, v.H0_lt_1, v.H_lt_1, v.H_monotone, v.gdd_neg, v.status)
    indeterminate = sum(v.status != "ok" for v in verdicts)
    print(f"{len(verdicts)} cells, {indeterminate} indeterminate")
    return {"conjecture.csv": table}, {}, {"cells": len(verdicts), "indeterminate": indeterminate}


def cmd_alpha_scan(args: argparse.Namespace, cfg: ResolvedConfig) -> CommandResult:
    c = _require(cfg.model.c, "--c")
    if args.alphas is not None:
        alphas = args.alphas
    else:
        if args.alpha_count < 2 or not args.alpha_max > args.alpha_min >= 0:
            raise DomainError("need 0 <= alpha-min < alpha-max and alpha-count >= 2")
        alphas = list(np.linspace(args.alpha_min, args.alpha_max, args.alpha_count))
    outcomes = scan_alpha(alphas, c, cfg.model.kappa, cfg.shoot_config())
    table = Table(ALPHA_SCAN_HEADER)
    for o in outcomes:
        table.add(o.alpha, o.kind.value, o.T, o.n_inf, o.m_inf)
    counts = {kind.value: sum(o.kind == kind for o in outcomes) for kind in ShootKind}
    print(", ".join(f"{k}: {v}" for k, v in counts.items()))
    return {"alpha_scan.csv": table}, {}, counts


COMMANDS: Dict[str, Callable[[argparse.Namespace, ResolvedConfig], CommandResult]] = {
    "shoot": cmd_shoot,
    "alpha1": cmd_alpha1,
    "alpha0": cmd_alpha0,
    "alpha-for-mbar": cmd_alpha_for_mbar,
    "min-speed": cmd_min_speed,
    "pde-run": cmd_pde_run,
    "speed-sweep": cmd_speed_sweep,
    "compare": cmd_compare,
    "conjecture-scan": cmd_conjecture_scan,
    "alpha-scan": cmd_alpha_scan,
}

# flag destination -> dotted config field
OVERRIDES = {
    "kappa": "model.kappa",
    "c": "model.c",
    "mbar": "model.m_bar",
    "alpha": "model.alpha",
    "L": "pde.L",
    "num_points": "pde.num_points",
    "sigma": "pde.sigma",
    "omega": "pde.omega",
    "t_final": "pde.t_final",
    "output_interval": "pde.output_interval",
    "y_max": "shoot.y_max",
    "seed_epsilon": "shoot.seed_epsilon",
    "kappa_list": "sweep.kappa_list",
    "mbar_list": "sweep.m_bar_list",
    "branch": "sweep.branch",
    "workers": "sweep.workers",
}


def build_parser() -> argparse.ArgumentParser:
    common = UsageErrorParser(add_help=False)
    common.add_argument("--config", type=str, default=None, help="JSON configuration file")
    common.add_argument("--out", type=str, default="results", help="Output directory")
    common.add_argument("--log-level", type=str, default="INFO",
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    common.add_argument("--workers", type=int, default=None, help="Worker processes for sweeps and scans")

    model = UsageErrorParser(add_help=False)
    model.add_argument("--kappa", type=float, default=None)
    model.add_argument("--c", type=float, default=None)
    model.add_argument("--mbar", type=float, default=None)

    shoot = UsageErrorParser(add_help=False)
    shoot.add_argument("--y-max", dest="y_max", type=float, default=None)
    shoot.add_argument("--seed-epsilon", dest="seed_epsilon", type=float, default=None)

    pde = UsageErrorParser(add_help=False)
    pde.add_argument("--L", dest="L", type=float, default=None)
    pde.add_argument("--num-points", dest="num_points", type=int, default=None)
    pde.add_argument("--sigma", type=float, default=None)
    pde.add_argument("--omega", type=float, default=None)
    pde.add_argument("--t-final", dest="t_final", type=float, default=None)
    pde.add_argument("--output-interval", dest="output_interval", type=float, default=None)

    grids = UsageErrorParser(add_help=False)
    grids.add_argument("--kappa-list", dest="kappa_list", type=_float_list, default=None)
    grids.add_argument("--mbar-list", dest="mbar_list", type=_float_list, default=None)

    parser = UsageErrorParser(prog="degenwave", description="Travelling waves of a degenerate cross-diffusion tumour model")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("shoot", parents=[common, model, shoot], help="Classify a single shot")
    p.add_argument("--alpha", type=float, default=None)
    p = sub.add_parser("alpha1", parents=[common, model, shoot], help="Smallest alpha converging to m = 1")
    p.add_argument("--check-seed", dest="check_seed", action="store_true",
                   help="Repeat the search with half the seed amplitude and report the change")
    sub.add_parser("alpha0", parents=[common, model, shoot], help="Largest alpha whose shot exits through n = 0")
    sub.add_parser("alpha-for-mbar", parents=[common, model, shoot], help="Alpha reaching a far-field density")
    p = sub.add_parser("min-speed", parents=[common, model, shoot], help="Minimal wave speed")
    p.add_argument("--numeric", action="store_true", help="Bisect on c even when the closed form applies")
    p = sub.add_parser("pde-run", parents=[common, model, pde], help="Simulate the PDE and track the front")
    p.add_argument("--snapshots", choices=["none", "final", "all"], default="final")
    sub.add_parser("speed-sweep", parents=[common, pde, grids], help="Front speeds over (kappa, M_bar) pairs")
    sub.add_parser("compare", parents=[common, model, pde, shoot], help="Compare PDE and ODE profiles")
    p = sub.add_parser("conjecture-scan", parents=[common, grids], help="Audit the minimal-speed conjecture")
    p.add_argument("--branch", choices=["minus", "plus"], default=None)
    p.add_argument("--samples", type=int, default=1000)
    p = sub.add_parser("alpha-scan", parents=[common, model, shoot], help="Tabulate shot outcomes over alpha")
    p.add_argument("--alphas", type=_float_list, default=None)
    p.add_argument("--alpha-min", dest="alpha_min", type=float, default=0.0)
    p.add_argument("--alpha-max", dest="alpha_max", type=float, default=5.0)
    p.add_argument("--alpha-count", dest="alpha_count", type=int, default=21)
    return parser


def resolve_config(args: argparse.Namespace) -> ResolvedConfig:
    """Defaults, then the config file, then the flags"""
    cfg = load_config(args.config)
    overrides = {field: getattr(args, dest) for dest, field in OVERRIDES.items() if hasattr(args, dest)}
    return apply_overrides(cfg, overrides)


def run_cli(argv: Optional[Sequence[str]] = None) -> int:
    """Run one subcommand and return its exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code is None else int(e.code)

    package_logger = logging.getLogger("degenwave")
    package_logger.setLevel(args.log_level)
    out_dir = Path(args.out)
    file_handler = None
    started = time.perf_counter()
    try:
        try:
            out_dir.mkdir(parents=True, exist_ok=True)
            file_handler = logging.FileHandler(out_dir / "degenwave.log", encoding="utf-8")
        except OSError as e:
            raise OutputError(f"cannot use output directory {out_dir}: {e}")
        file_handler.setFormatter(logging.Formatter(LOG_FORMAT))
        package_logger.addHandler(file_handler)

        cfg = resolve_config(args)
        logger.info(f"Running {args.command}")
        tables, profiles, results = COMMANDS[args.command](args, cfg)
        manifest = RunManifest(
            command=args.command,
            params=cfg.to_dict(),
            wall_time=time.perf_counter() - started,
            results=to_jsonable(results),
        )
        write_outputs(manifest, tables, profiles, out_dir)
        return EXIT_OK
    except DomainError as e:
        logger.error(f"{args.command}: {e}")
        return EXIT_DOMAIN
    except NumericalError as e:
        if isinstance(e, OutputError):
            logger.warning("Some outputs may be missing or incomplete")
        logger.error(f"{args.command}: {e}")
        return EXIT_NUMERICAL
    finally:
        if file_handler is not None:
            package_logger.removeHandler(file_handler)
            file_handler.close()


def main():
    """Entry point for the degenwave command"""
    logging.basicConfig(level=logging.INFO, format=LOG_FORMAT)
    sys.exit(run_cli(sys.argv[1:]))


if __name__ == "__main__":
    main()
