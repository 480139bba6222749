"""
Hyperpulse Framework.

Copyright 2024.
"""

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from ..dynamics import DEFAULT_STEP, ControlProfile
from ..exceptions import HyperpulseError, NoFeasibleSolutionError, NoRootFoundError, ValidationError
from .base import select_best, zero_result
from .direct import DEFAULT_GRID, DirectOptions, solve_direct
from .switching import SWITCH_COUNTS, solve_switch_times

logger = logging.getLogger(__name__)

AXES = ("T", "g")
METHODS = ("direct", "switch", "enumerate")
REFEREE_MARGIN = 1e-6
REFEREE_OUTER = 4
REFEREE_INNER = 60
MONOTONE_SLACK = 1e-6


def _structured(bound, horizon, seeds=None, step=DEFAULT_STEP):
    """Return (results, candidate records) over every structure and first sign."""
    seeds = seeds or {}
    results = []
    records = []
    for structure in SWITCH_COUNTS:
        for sign in (1, -1):
            try:
                result = solve_switch_times(bound, horizon, structure, sign, seeds=seeds.get(structure), step=step)
            except NoRootFoundError as exc:
                logger.info("%s", exc)
                records.append({"method": "switch", "structure": structure, "first_sign": sign, "status": "no root"})
                continue
            results.append(result)
            records.append({**result.summary(), "status": "ok"})
    return results, records


def solve_structured(bound, horizon, seeds=None, step=DEFAULT_STEP):
    """
    Return the best switch-time solution over all structures and first signs.

    :param float bound:       Control bound G
    :param float horizon:     Duration T
    :param dict seeds:        Extra starting instants per structure name
    :param float step:        Integrator step bound
    :return SolveResult:      Winner with the candidate records attached
    :raises NoRootFoundError: No structure has a root
    """
    results, records = _structured(bound, horizon, seeds, step)
    if not results:
        raise NoRootFoundError(f"no pulse structure has a root for G = {bound}, T = {horizon}")
    winner = select_best(results)
    winner.candidates = records
    return winner


def referee_options(options, winner=None):
    """
    Return the direct solver settings of the referee.

    The referee starts from the structured winner alone, or from the quick
    seed set when no structure has a root, with the augmented Lagrangian
    capped at REFEREE_OUTER x REFEREE_INNER iterations.

    :param DirectOptions options:  Base settings
    :param SolveResult winner:     Best structured candidate, if any
    :return DirectOptions:         Referee settings
    """
    capped = replace(
        options,
        max_outer=min(options.max_outer, REFEREE_OUTER),
        max_inner=min(options.max_inner, REFEREE_INNER),
    )
    if winner is None:
        return replace(capped, seed_set="quick", warm_starts=())
    return replace(capped, seed_set="warm", warm_starts=(winner.profile,))


def enumerate_candidates(
    bound, horizon, referee=True, grid=DEFAULT_GRID, direct_options=None, seeds=None, step=DEFAULT_STEP
):
    """
    Compare every pulse structure, the zero baseline and the direct referee.

    Structured solutions win unless the direct referee, warm-started from the
    structured winner, beats them by more than a relative 1e-6 in q1(T),
    which is reported as a warning.

    :param float bound:                  Control bound G
    :param float horizon:                Duration T
    :param bool referee:                 Also run the direct solver
    :param int grid:                     Direct solver intervals
    :param DirectOptions direct_options: Direct solver settings
    :param dict seeds:                   Extra switch-time starts per structure
    :param float step:                   Integrator step bound
    :return SolveResult:                 Winner, with every candidate recorded
    """
    started = time.perf_counter()
    baseline = zero_result(bound, horizon, "zero")
    if horizon == 0:
        baseline.candidates = [{**baseline.summary(), "status": "ok"}]
        return baseline

    structured, records = _structured(bound, horizon, seeds, step)
    records.insert(0, {**baseline.summary(), "status": "ok"})
    winner = select_best(structured) if structured else None

    if referee:
        options = referee_options(direct_options or DirectOptions(step=step), winner)
        try:
            direct = solve_direct(bound, horizon, grid, options)
        except NoFeasibleSolutionError as exc:
            logger.warning("direct referee: %s", exc)
            records.append({"method": "direct", "status": "infeasible"})
        else:
            records.append({**direct.summary(), "status": "ok"})
            if winner is None:
                winner = direct
            elif direct.objective < winner.objective - REFEREE_MARGIN * (1.0 + abs(winner.objective)):
                logger.warning(
                    "direct referee (%s, r = %.6f) beats the best structured candidate (%s, r = %.6f)",
                    direct.structure,
                    direct.r,
                    winner.structure,
                    winner.r,
                )
                winner = direct
            else:
                logger.info("direct referee agrees: r = %.6f vs %.6f", direct.r, winner.r)

    if winner is None or winner.objective > baseline.objective:
        winner = baseline

    winner.candidates = records
    winner.stats.wall_ms = 1e3 * (time.perf_counter() - started)
    logger.info(
        "G = %g, T = %g: winner %s (%s) with r = %.6f", bound, horizon, winner.structure, winner.method, winner.r
    )
    return winner


def solve(
    bound,
    horizon,
    method="enumerate",
    referee=True,
    grid=DEFAULT_GRID,
    direct_options=None,
    seeds=None,
    step=DEFAULT_STEP,
):
    """
    Dispatch one solve by method name.

    :param str method:    direct, switch or enumerate
    :return SolveResult:  Result
    """
    if method not in METHODS:
        raise ValidationError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    if method == "direct":
        return solve_direct(bound, horizon, grid, direct_options or DirectOptions(step=step))
    if method == "switch":
        if horizon == 0:
            return zero_result(bound, horizon, "switch")
        return solve_structured(bound, horizon, seeds, step)
    return enumerate_candidates(bound, horizon, referee, grid, direct_options, seeds, step)


@dataclass
class SweepRow:
    """One grid point of a sweep."""

    axis: str
    axis_value: float
    result: object = None
    status: str = "ok"

    @property
    def ok(self):
        """Return True when the point solved."""
        return self.result is not None

    @property
    def r(self):
        """Return the squeezing parameter, NaN for failed points."""
        return self.result.r if self.ok else math.nan

    def to_row(self):
        """Return the CSV record."""
        if not self.ok:
            return {
                "axis_value": self.axis_value,
                "r": math.nan,
                "structure": "",
                "residual_q2": math.nan,
                "residual_q3": math.nan,
                "singular_fraction": math.nan,
                "status": self.status,
            }
        residual_q2, residual_q3 = self.result.residuals
        return {
            "axis_value": self.axis_value,
            "r": self.result.r,
            "structure": self.result.structure,
            "residual_q2": residual_q2,
            "residual_q3": residual_q3,
            "singular_fraction": self.result.singular_fraction,
            "status": self.status,
        }


def sweep_values(start, stop, step):
    """
    Return start, start + step, ... up to stop inclusive.

    :raises ValidationError:  Non-positive step or empty range
    """
    if not step > 0:
        raise ValidationError(f"sweep step must be positive, got {step}")
    if stop < start:
        raise ValidationError(f"empty sweep range: {start} > {stop}")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [float(x) for x in start + step * np.arange(count)]


def _problem(axis, value, fixed):
    """Return (bound, horizon) for one grid point."""
    return (fixed, value) if axis == "T" else (value, fixed)


def _warm_start(previous, bound, horizon):
    """Rescale a neighbouring solution onto the next grid point: (switch instants or None, profile)."""
    if previous is None or not previous.profile.segments or previous.horizon <= 0 or horizon <= 0:
        return None, None
    ratio = horizon / previous.horizon
    times = None
    if previous.structure in SWITCH_COUNTS and previous.first_sign in (1, -1):
        times = tuple(min(t * ratio, horizon) for t in previous.switch_times)
    segments = tuple((d * ratio, g * bound / previous.g_max) for d, g in previous.profile.segments)
    return times, ControlProfile(segments, bound)


def _refine(axis, value, fixed, method, grid, options, previous, current, step):
    """
    Re-solve one point from the neighbouring solution alone and keep the better result.

    :return SolveResult:  ``current`` unless the warm start beats it, None when both failed
    """
    bound, horizon = _problem(axis, value, fixed)
    times, profile = _warm_start(previous, bound, horizon)
    try:
        if method == "direct" and profile is not None:
            warm = solve_direct(bound, horizon, grid, replace(options, seed_set="warm", warm_starts=(profile,)))
        elif method != "direct" and times is not None:
            warm = solve_switch_times(
                bound, horizon, previous.structure, previous.first_sign, seeds=[times], defaults=False, step=step
            )
        else:
            return current
    except HyperpulseError as exc:
        logger.debug("%s = %g: warm start gave nothing: %s", axis, value, exc)
        return current

    if current is None:
        return warm
    best = select_best([current, warm])
    if best is not warm:
        return current
    logger.info("%s = %g: warm start improves r from %.6f to %.6f", axis, value, current.r, warm.r)
    warm.candidates = [*current.candidates, {**warm.summary(), "status": "ok"}]
    return warm


def sweep(
    axis,
    values,
    fixed,
    method="enumerate",
    referee=True,
    grid=DEFAULT_GRID,
    direct_options=None,
    step=DEFAULT_STEP,
    workers=1,
):
    """
    Solve along one parameter axis.

    Every point is first solved cold, concurrently when ``workers > 1``.
    A sequential pass then re-solves each point from the previous point's
    solution and keeps whichever is better, so the rows do not depend on
    the worker count. Rows come back ordered by axis value and failures are
    recorded per point.

    :param str axis:                      T (duration) or g (control bound)
    :param list values:                   Axis values
    :param float fixed:                   The other parameter
    :param str method:                    direct, switch or enumerate
    :param bool referee:                  Run the direct referee when enumerating
    :param int grid:                      Direct solver intervals
    :param DirectOptions direct_options:  Direct solver settings
    :param float step:                    Integrator step bound
    :param int workers:                   Concurrent cold solves
    :return list:                         SweepRow per value
    """
    if axis not in AXES:
        raise ValidationError(f"unknown sweep axis {axis!r}; choose from {', '.join(AXES)}")
    values = sorted(float(v) for v in values)
    if not values:
        raise ValidationError("empty sweep range")
    options = direct_options or DirectOptions(step=step)

    def run(value):
        bound, horizon = _problem(axis, value, fixed)
        try:
            result = solve(bound, horizon, method, referee, grid, options, step=step)
        except HyperpulseError as exc:
            logger.warning("%s = %g failed: %s", axis, value, exc)
            return SweepRow(axis, value, None, f"failed: {exc}")
        return SweepRow(axis, value, result)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(run, values))
    else:
        rows = [run(value) for value in values]

    previous = None
    for index, row in enumerate(rows):
        result = _refine(axis, row.axis_value, fixed, method, grid, options, previous, row.result, step)
        if result is not row.result:
            rows[index] = SweepRow(axis, row.axis_value, result)
        previous = result if result is not None else previous

    solved = [row for row in rows if row.ok]
    for left, right in zip(solved, solved[1:]):
        if right.r < left.r - MONOTONE_SLACK:
            logger.warning(
                "r decreases from %.6f to %.6f between %s = %g and %g",
                left.r,
                right.r,
                axis,
                left.axis_value,
                right.axis_value,
            )
    return rows


def minimum_time_for(rows, r_target):
    """
    Return the shortest swept duration whose optimal squeezing reaches a target.

    :param list rows:       Rows of a T sweep
    :param float r_target:  Required squeezing parameter
    :return float:          Duration, or None when no row reaches the target
    """
    if any(row.axis != "T" for row in rows):
        raise ValidationError("minimum time needs a sweep over T")
    reached = [row.axis_value for row in rows if row.ok and row.r >= r_target]
    return min(reached) if reached else None
