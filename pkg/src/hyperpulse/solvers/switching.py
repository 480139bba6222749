"""
Hyperpulse Framework.

Copyright 2024.
"""

import itertools
import logging
import time

import numpy as np

from ..dynamics import DEFAULT_STEP, ControlProfile, ReducedState, segment_propagator
from ..exceptions import NoRootFoundError, SwitchTimeError, ValidationError
from .base import result_from_schedule

logger = logging.getLogger(__name__)

SWITCH_COUNTS = {"BBB": 2, "BBSB": 3}
ROOT_TOLERANCE = 1e-10
DIFFERENCE_SCALE = 1e-7
MAX_NEWTON = 60
MIN_GAP = 1e-9

ORIGIN_MOMENTS = np.array([0.0, 0.0, 0.0, 1.0])


def structure_controls(structure, first_sign, bound, final_sign=None):
    """
    Return the coupling on each segment of a pulse structure.

    :param str structure:    BBB or BBSB
    :param int first_sign:   Sign of the first bang
    :param float bound:      Control bound G
    :param int final_sign:   Sign of the last BBSB bang (default: first_sign)
    :return list:            One coupling per segment
    """
    if structure not in SWITCH_COUNTS:
        raise ValidationError(f"unknown structure {structure!r}; choose from {', '.join(SWITCH_COUNTS)}")
    if first_sign not in (1, -1):
        raise ValidationError(f"first sign must be +1 or -1, got {first_sign}")
    bang = first_sign * bound
    if structure == "BBB":
        return [bang, -bang, bang]
    final_sign = first_sign if final_sign is None else final_sign
    return [bang, -bang, 0.0, final_sign * bound]


def _check_times(structure, switch_times, horizon):
    count = SWITCH_COUNTS[structure]
    if len(switch_times) != count:
        raise ValidationError(f"{structure} takes {count} switch times, got {len(switch_times)}")
    edges = [0.0, *switch_times, horizon]
    if any(right < left for left, right in zip(edges, edges[1:])):
        raise SwitchTimeError(f"switch times must be non-decreasing within [0, {horizon}]: {list(switch_times)}")


def structure_profile(bound, horizon, structure, first_sign, switch_times, final_sign=None):
    """
    Return the schedule of a structure with given switch instants.

    Coincident switch instants collapse the segment between them.

    :return ControlProfile:    Schedule
    :raises SwitchTimeError:   Decreasing or out-of-range switch times
    """
    switch_times = [float(t) for t in switch_times]
    _check_times(structure, switch_times, horizon)
    controls = structure_controls(structure, first_sign, bound, final_sign)
    return ControlProfile.from_switch_times(horizon, switch_times, controls, bound)


def _boundary_moments(horizon, switch_times, controls, step):
    """Return the (Q, J0) moments at 0, every switch instant and T."""
    edges = [0.0, *switch_times, horizon]
    moments = [ORIGIN_MOMENTS]
    for left, right, g in zip(edges, edges[1:], controls):
        moments.append(segment_propagator(g, right - left, step) @ moments[-1])
    return moments


def _central_differences(func, times, horizon, delta):
    """
    Differentiate ``func`` with respect to each switch instant.

    Perturbations are clipped at the neighbouring instants, which turns the
    difference one-sided at coincident switches.
    """
    times = np.asarray(times, dtype=float)
    edges = np.concatenate(([0.0], times, [horizon]))
    columns = []
    for j in range(len(times)):
        low = max(times[j] - delta, edges[j])
        high = min(times[j] + delta, edges[j + 2])
        if high <= low:
            columns.append(np.zeros_like(func(times)))
            continue
        below, above = times.copy(), times.copy()
        below[j], above[j] = low, high
        columns.append((func(above) - func(below)) / (high - low))
    return np.column_stack(columns)


def simulate_structure(bound, horizon, structure, first_sign, switch_times, final_sign=None, step=DEFAULT_STEP):
    """
    Return the final state of a structure and its switch-time sensitivities.

    :param float bound:         Control bound G
    :param float horizon:       Duration T
    :param str structure:       BBB or BBSB
    :param int first_sign:      Sign of the first bang
    :param list switch_times:   Non-decreasing interior switch instants
    :param int final_sign:      Sign of the last BBSB bang
    :param float step:          Integrator step bound
    :return tuple:              (ReducedState at T, 3 x k array of d(q1, q2, q3)/dt_j)
    :raises SwitchTimeError:    Decreasing or out-of-range switch times
    """
    switch_times = [float(t) for t in switch_times]
    _check_times(structure, switch_times, horizon)
    controls = structure_controls(structure, first_sign, bound, final_sign)

    def final(times):
        return _boundary_moments(horizon, times, controls, step)[-1][:3]

    state = ReducedState(*(float(x) for x in final(switch_times)))
    return state, _central_differences(final, switch_times, horizon, DIFFERENCE_SCALE * horizon)


def _ordered(times, horizon):
    edges = np.concatenate(([0.0], times, [horizon]))
    return bool(np.all(np.diff(edges) >= 0))


def _newton(residual, start, horizon, tol):
    """Damped Newton iteration that keeps the switch instants ordered in [0, T]."""
    x = np.asarray(start, dtype=float)
    if not _ordered(x, horizon):
        return None
    f = residual(x)
    norm = np.max(np.abs(f))

    for _ in range(MAX_NEWTON):
        if norm <= tol:
            break
        jacobian = _central_differences(residual, x, horizon, DIFFERENCE_SCALE * horizon)
        direction, *_ = np.linalg.lstsq(jacobian, -f, rcond=None)
        alpha = 1.0
        while alpha > 1e-6:
            trial = x + alpha * direction
            if _ordered(trial, horizon):
                candidate = residual(trial)
                candidate_norm = np.max(np.abs(candidate))
                if candidate_norm < norm:
                    x, f, norm = trial, candidate, candidate_norm
                    break
            alpha *= 0.5
        else:
            return None

    edges = np.concatenate(([0.0], x, [horizon]))
    if norm <= tol and np.all(np.diff(edges) > MIN_GAP):
        return x
    return None


def default_seeds(structure, horizon):
    """
    Return the starting switch instants tried for a structure.

    :param str structure:    BBB or BBSB
    :param float horizon:    Duration T
    :return list:            Increasing tuples of switch instants
    """
    if structure == "BBB":
        fractions = np.linspace(0.1, 0.8, 8)
    else:
        fractions = np.linspace(0.1, 0.9, 9)
    return [tuple(horizon * f for f in combo) for combo in itertools.combinations(fractions, SWITCH_COUNTS[structure])]


def solve_switch_times(
    bound,
    horizon,
    structure,
    first_sign,
    seeds=None,
    final_signs=None,
    step=DEFAULT_STEP,
    tol=ROOT_TOLERANCE,
    defaults=True,
):
    """
    Solve the terminal conditions of a pulse structure for its switch instants.

    BBB solves (q2(T), q3(T)) = 0 over two instants. BBSB additionally puts
    the singular entry on q1 = 0, solving (q1(t2), q2(T), q3(T)) = 0 over
    three instants, for each sign of the final bang. Among all converged
    roots the one with minimal q1(T) is returned.

    :param float bound:         Control bound G
    :param float horizon:       Duration T
    :param str structure:       BBB or BBSB
    :param int first_sign:      Sign of the first bang
    :param list seeds:          Extra starting instants, tried before the defaults
    :param tuple final_signs:   BBSB final bang signs to try (default: both)
    :param float step:          Integrator step bound
    :param float tol:           Root tolerance on the residuals
    :param bool defaults:       Also try the default_seeds grid
    :return SolveResult:        Result with a PMP report
    :raises NoRootFoundError:   No seed converged
    """
    if not bound > 0 or not horizon > 0:
        raise ValidationError(f"bound and horizon must be positive, got G = {bound}, T = {horizon}")
    structure_controls(structure, first_sign, bound)

    if structure == "BBB":
        final_signs = (None,)
    elif final_signs is None:
        final_signs = (first_sign, -first_sign)

    starts = [tuple(seed) for seed in seeds or ()]
    if defaults:
        starts += default_seeds(structure, horizon)
    started = time.perf_counter()
    roots = []

    for final_sign in final_signs:
        controls = structure_controls(structure, first_sign, bound, final_sign)

        def residual(times, controls=controls):
            moments = _boundary_moments(horizon, times, controls, step)
            if structure == "BBB":
                return moments[-1][1:3]
            return np.array([moments[2][0], moments[-1][1], moments[-1][2]])

        for seed in starts:
            if len(seed) != SWITCH_COUNTS[structure]:
                continue
            root = _newton(residual, seed, horizon, tol)
            if root is None:
                continue
            q1 = _boundary_moments(horizon, root, controls, step)[-1][0]
            if q1 > 0:
                continue
            roots.append((q1, float(root[0]), final_sign, root))

    if not roots:
        raise NoRootFoundError(
            f"{structure} with first sign {first_sign:+d} has no root for G = {bound}, T = {horizon}"
        )

    q1, _, final_sign, root = min(roots, key=lambda item: (item[0], item[1]))
    logger.info("%s %+d: %d roots, best q1T = %.10f at %s", structure, first_sign, len(roots), q1, np.round(root, 6))

    profile = structure_profile(bound, horizon, structure, first_sign, root, final_sign)
    result = result_from_schedule(profile, "switch", structure, first_sign, step=step)
    result.stats.iterations = len(roots)
    result.stats.starts = len(starts) * len(final_signs)
    result.stats.wall_ms = 1e3 * (time.perf_counter() - started)
    return result
