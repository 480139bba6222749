"""
Hyperpulse Framework.

Copyright 2024.
"""

import argparse
import logging
import sys

from .config import LOGLEVELS, RunConfig
from .dynamics import ControlProfile, integrate_reduced
from .exceptions import HyperpulseError, NoRootFoundError
from .media import read_json, write_json, write_sweep_csv, write_trajectory_csv
from .oracle import LARGE_MOMENT_TOLERANCE, MOMENT_TOLERANCE, run_oracle
from .plot import sweep_plot, trajectory_plot
from .pmp import GRID_TOLERANCES, Tolerances, verify_candidate
from .solvers import SolveResult, solve, sweep
from .solvers.enumerate import AXES, METHODS
from .status_codes import EXIT_ERROR, EXIT_OK, EXIT_PMP_FAIL, describe

logger = logging.getLogger(__name__)


def _common(parser):
    parser.add_argument("--config", help="Configuration file with a [config] section", default=None)
    parser.add_argument("--loglevel", help="Logging level", choices=LOGLEVELS, default=None)
    parser.add_argument("--out", help="Output file (default: stdout)", default=None)
    parser.add_argument("--dt", dest="step", help="Integrator step bound", type=float, default=None)
    parser.add_argument("--tol-feas", help="Endpoint feasibility tolerance", type=float, default=None)


def _problem(parser):
    parser.add_argument("--g-max", help="Control bound G", type=float, default=None)
    parser.add_argument("--T", dest="T", help="Duration", type=float, default=None)
    parser.add_argument("--method", help="Solver", choices=METHODS, default=None)
    parser.add_argument("--grid", help="Direct solver intervals", type=int, default=None)
    parser.add_argument("--seed-set", help="Direct solver multi-start set", default=None)
    parser.add_argument(
        "--no-referee",
        dest="referee",
        help="Skip the direct referee when enumerating",
        action="store_false",
        default=None,
    )
    parser.add_argument("--plot", help="SVG plot path", default=None)


def build_parser():
    """Return the command-line parser."""
    parser = argparse.ArgumentParser(prog="hyperpulse", description="Optimal entangling pulse schedules")
    commands = parser.add_subparsers(dest="command", required=True)

    solve_parser = commands.add_parser("solve", help="Solve one (G, T) case")
    _common(solve_parser)
    _problem(solve_parser)
    solve_parser.add_argument("--traj", help="Trajectory CSV path", default=None)

    sweep_parser = commands.add_parser("sweep", help="Solve along the G or T axis")
    _common(sweep_parser)
    _problem(sweep_parser)
    sweep_parser.add_argument("--vary", help="Swept parameter", choices=AXES, default=None)
    sweep_parser.add_argument("--from", dest="sweep_from", help="First value", type=float, default=None)
    sweep_parser.add_argument("--to", dest="sweep_to", help="Last value", type=float, default=None)
    sweep_parser.add_argument("--step", dest="sweep_step", help="Increment", type=float, default=None)
    sweep_parser.add_argument("--workers", help="Concurrent sweep points", type=int, default=None)

    verify_parser = commands.add_parser("verify", help="Check a result file against the minimum principle")
    _common(verify_parser)
    verify_parser.add_argument("result", help="SolveResult JSON", nargs="?", default=None)

    oracle_parser = commands.add_parser("oracle", help="Cross-check a result file in Fock space")
    _common(oracle_parser)
    oracle_parser.add_argument("result", help="SolveResult JSON", nargs="?", default=None)
    oracle_parser.add_argument("--na", help="Fock cutoff of mode a", type=int, default=None)
    oracle_parser.add_argument("--nb", help="Fock cutoff of mode b", type=int, default=None)
    oracle_parser.add_argument("--oracle-step", help="Fock integrator step bound", type=float, default=None)
    oracle_parser.add_argument(
        "--large-truncation",
        help="Raise the cutoffs for strongly squeezed results",
        action="store_true",
        default=None,
    )
    return parser


def _run_profile(result):
    """Return the schedule that produced q_final: raw grid controls for direct solves."""
    if result.grid_values is not None and result.horizon > 0:
        return ControlProfile.from_grid(result.grid_values, result.horizon, result.g_max)
    return result.profile


def _exit_for(report):
    if report.passed is None:
        logger.warning("PMP check underdetermined: %s", "; ".join(report.violations) or "no switches to certify")
        return EXIT_OK
    if not report.passed:
        logger.warning("PMP check failed: %s", "; ".join(report.violations))
        return EXIT_PMP_FAIL
    return EXIT_OK


def cmd_solve(config):
    """
    Solve one case and write the result.

    :param RunConfig config:   Configuration
    :return int:               Exit status
    """
    try:
        result = solve(
            config.g_max,
            config.T,
            config.method,
            config.referee,
            config.grid,
            config.direct_options(),
            step=config.step,
        )
    except NoRootFoundError as exc:
        logger.warning("%s; falling back to the direct solver", exc)
        result = solve(config.g_max, config.T, "direct", False, config.grid, config.direct_options(), step=config.step)

    write_json(config.out, result.to_dict(config.as_dict()))
    logger.info("structure %s, r = %.6f, %s", result.structure, result.r, result.pmp.verdict)

    if config.traj or config.plot:
        trajectory = integrate_reduced(_run_profile(result), step=config.step)
        if config.traj:
            write_trajectory_csv(config.traj, trajectory)
        if config.plot:
            series = None if result.pmp is None else result.pmp.series
            trajectory_plot(trajectory, config.plot, str(config.as_dict()), series)

    return _exit_for(result.pmp)


def cmd_sweep(config):
    """
    Solve along one axis and write the sweep table.

    :param RunConfig config:   Configuration
    :return int:               Exit status
    """
    fixed = config.T if config.vary == "g" else config.g_max
    rows = sweep(
        config.vary,
        config.sweep_values(),
        fixed,
        config.method,
        config.referee,
        config.grid,
        config.direct_options(),
        config.step,
        config.worker_count(),
    )
    write_sweep_csv(config.out, rows)
    if config.plot:
        sweep_plot(rows, config.plot, str(config.as_dict()))
    if not any(row.ok for row in rows):
        logger.error("no sweep point solved")
        return EXIT_ERROR
    return EXIT_OK


def _load_result(config):
    return SolveResult.from_dict(read_json(config.result))


def cmd_verify(config):
    """
    Re-simulate a result file and check it against the minimum principle.

    :param RunConfig config:   Configuration
    :return int:               Exit status
    """
    result = _load_result(config)
    tolerances = GRID_TOLERANCES if result.method == "direct" else Tolerances(feas=config.tol_feas)
    trajectory = integrate_reduced(result.profile, step=config.step)
    report = verify_candidate(trajectory, tolerances, strict=False)
    write_json(config.out, {**report.to_dict(), "config": config.as_dict()})
    return _exit_for(report)


def cmd_oracle(config):
    """
    Evolve a result file's schedule in Fock space and write the comparison.

    :param RunConfig config:   Configuration
    :return int:               Exit status
    """
    result = _load_result(config)
    na, nb = config.cutoffs()
    report = run_oracle(_run_profile(result), na, nb, config.oracle_step)
    write_json(config.out, {**report.to_dict(), "config": config.as_dict()})
    tolerance = LARGE_MOMENT_TOLERANCE if config.large_truncation else MOMENT_TOLERANCE
    if not report.within_thresholds(tolerance):
        logger.warning(
            "oracle disagrees: moment error %.2e, entropy error %.2e, variance error %.2e",
            report.max_moment_error,
            report.entropy_error,
            report.variance_error,
        )
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
    "oracle": cmd_oracle,
}


def main(argv=None):
    """Execute main method."""
    args = vars(build_parser().parse_args(argv))
    config_file = args.pop("config")

    try:
        config = RunConfig.from_sources(config_file, **args).validate()
        logging.basicConfig(
            level=config.loglevel.upper(),
            format="%(asctime)s %(name)s %(levelname)s %(message)s",
        )
        status = COMMANDS[config.command](config)
    except (HyperpulseError, OSError) as exc:
        print(f"hyperpulse: {exc}", file=sys.stderr)
        status = EXIT_ERROR

    logger.debug("exit %s", describe(status))
    return status
