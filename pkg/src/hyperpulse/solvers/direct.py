"""
Hyperpulse Framework.

Copyright 2024.
"""

import logging
import math
import time
from dataclasses import dataclass

import numpy as np
from scipy.optimize import Bounds, minimize

from ..dynamics import (
    DEFAULT_STEP,
    MOMENT_COUPLING,
    ControlProfile,
    ReducedState,
    cumulative_products,
    integrate_reduced,
    moment_matrix,
    reverse_cumulative_products,
    rk4_polynomial,
    segment_steps,
)
from ..exceptions import DivergenceError, NoFeasibleSolutionError, ValidationError
from ..geometry import r_from_final
from ..pmp import GRID_TOLERANCES, verify_candidate
from .base import SolveResult, SolverStats, classify_grid, zero_result

logger = logging.getLogger(__name__)

DEFAULT_GRID = 4000
MIN_GRID = 100
RESTORATION_STEPS = 30

SEED_SETS = {
    "standard": ("zero", "plus", "minus", "random", "random", "random"),
    "quick": ("zero", "plus", "minus"),
    "warm": (),
}

ORIGIN_MOMENTS = np.array([0.0, 0.0, 0.0, 1.0])
CONSTRAINT_WEIGHTS = np.array([[0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]])


@dataclass(frozen=True)
class DirectOptions:
    """
    Settings of the augmented Lagrangian transcription solver.

    :param float step:               Integrator step bound inside each interval
    :param float tol_feas:           Required |q2(T)|, |q3(T)|
    :param str seed_set:             Name in SEED_SETS; "warm" runs the warm starts only
    :param int random_seed:          Seed of the random bang patterns
    :param int max_outer:            Multiplier updates; 0 returns the zero profile
    :param int max_inner:            L-BFGS-B iterations per outer step
    :param float rho_initial:        Initial penalty weight
    :param float rho_growth:         Penalty factor when the constraints stall
    :param float rho_max:            Penalty cap
    :param float required_decrease:  Constraint norm ratio counted as progress
    :param tuple warm_starts:        Extra ControlProfile starts, tried first
    """

    step: float = DEFAULT_STEP
    tol_feas: float = 1e-8
    seed_set: str = "standard"
    random_seed: int = 0
    max_outer: int = 30
    max_inner: int = 500
    rho_initial: float = 10.0
    rho_growth: float = 10.0
    rho_max: float = 1e8
    required_decrease: float = 0.25
    warm_starts: tuple = ()

    def __post_init__(self):
        """Validate settings."""
        if self.seed_set not in SEED_SETS:
            raise ValidationError(f"unknown seed set {self.seed_set!r}; choose from {', '.join(SEED_SETS)}")
        if self.seed_set == "warm" and not self.warm_starts:
            raise ValidationError("seed set 'warm' needs at least one warm start")
        if not self.step > 0:
            raise ValidationError(f"step must be positive, got {self.step}")


@dataclass(frozen=True)
class TranscriptionGrid:
    """Equal-width control intervals, one coupling value per interval."""

    bound: float
    horizon: float
    values: np.ndarray
    step: float = DEFAULT_STEP

    def __post_init__(self):
        """Project values onto [-G, G] and validate the grid."""
        if not self.bound > 0:
            raise ValidationError(f"control bound must be positive, got {self.bound}")
        if not self.horizon > 0:
            raise ValidationError(f"horizon must be positive, got {self.horizon}")
        values = np.clip(np.asarray(self.values, dtype=float), -self.bound, self.bound)
        if values.ndim != 1 or len(values) < MIN_GRID:
            raise ValidationError(f"grid needs at least {MIN_GRID} intervals, got {values.size}")
        object.__setattr__(self, "values", values)

    @property
    def size(self):
        """Return the number of intervals."""
        return len(self.values)

    @property
    def width(self):
        """Return the interval width T/N."""
        return self.horizon / self.size

    @classmethod
    def from_profile(cls, profile, size, step=DEFAULT_STEP):
        """
        Average a profile over equal intervals.

        :param ControlProfile profile:   Schedule
        :param int size:                 Number of intervals
        :param float step:               Integrator step bound
        :return TranscriptionGrid:       Grid
        """
        boundaries = profile.boundaries
        area = np.concatenate(([0.0], np.cumsum([duration * g for duration, g in profile.segments])))
        edges = np.linspace(0.0, profile.horizon, size + 1)
        values = np.diff(np.interp(edges, boundaries, area)) / (profile.horizon / size)
        return cls(profile.bound, profile.horizon, values, step)


def _interval_blocks(grid):
    """
    Return per-interval transfer matrices and their derivatives in g.

    The derivative of a matrix function along Z' is the upper-right block of
    the same function applied to [[Z, Z'], [0, Z]].
    """
    h, count, last = segment_steps(grid.width, grid.step)
    system = moment_matrix(grid.values)
    coupling = np.broadcast_to(MOMENT_COUPLING, system.shape)
    zeros = np.zeros_like(system)

    def block(scale):
        top = np.concatenate((scale * system, scale * coupling), axis=2)
        bottom = np.concatenate((zeros, scale * system), axis=2)
        return np.concatenate((top, bottom), axis=1)

    whole = np.linalg.matrix_power(rk4_polynomial(block(h)), count)
    blocks = rk4_polynomial(block(last)) @ whole
    return blocks[:, :4, :4], blocks[:, :4, 4:]


def _forward(transfer):
    """Return the moments entering each interval and the final moments."""
    after = cumulative_products(transfer) @ ORIGIN_MOMENTS
    if not np.all(np.isfinite(after)):
        raise DivergenceError("moments diverged during transcription")
    before = np.vstack((ORIGIN_MOMENTS, after[:-1]))
    return before, after[-1]


def _terminal_sensitivities(transfer, derivative, before, weights):
    """
    Return d(w . x(T))/dg_k for each row w of ``weights``.

    :return:   Array (len(weights), N)
    """
    suffix = reverse_cumulative_products(np.swapaxes(transfer, 1, 2))
    downstream = np.concatenate((suffix[1:], np.eye(4)[None]), axis=0)
    adjoints = np.einsum("kij,mj->mki", downstream, weights)
    return np.einsum("mki,kij,kj->mk", adjoints, derivative, before)


def objective_and_constraints(grid):
    """
    Propagate the origin through every interval.

    :param TranscriptionGrid grid:  Controls
    :return ReducedState:           (q1(T), q2(T), q3(T))
    :raises DivergenceError:        Non-finite moments
    """
    transfer, _ = _interval_blocks(grid)
    _, final = _forward(transfer)
    return ReducedState(*(float(x) for x in final[:3]))


def adjoint_gradient(grid, weights=(0.0, 0.0, 0.0)):
    """
    Return the gradient of q1 + mu2 q2 + mu3 q3 + rho/2 (q2^2 + q3^2) at T.

    :param TranscriptionGrid grid:  Controls
    :param tuple weights:           (mu2, mu3, rho)
    :return:                        Array of N derivatives with respect to the interval couplings
    """
    mu2, mu3, rho = weights
    transfer, derivative = _interval_blocks(grid)
    before, final = _forward(transfer)
    row = np.array([1.0, mu2 + rho * final[1], mu3 + rho * final[2], 0.0])
    return _terminal_sensitivities(transfer, derivative, before, row[None])[0]


def _grid(bound, horizon, scaled, step):
    return TranscriptionGrid(bound, horizon, bound * scaled, step)


def _augmented_lagrangian(bound, horizon, start, options):
    """Return (scaled controls, inner iterations, final penalty) from one start."""
    scaled = np.clip(start, -1.0, 1.0)
    box = Bounds(-np.ones_like(scaled), np.ones_like(scaled))
    mu = np.zeros(2)
    rho = options.rho_initial
    previous = math.inf
    iterations = 0

    for outer in range(options.max_outer):

        def fun(x, mu=mu, rho=rho):
            transfer, derivative = _interval_blocks(_grid(bound, horizon, x, options.step))
            before, final = _forward(transfer)
            c = final[1:3]
            value = final[0] + mu @ c + 0.5 * rho * (c @ c)
            row = np.array([1.0, mu[0] + rho * c[0], mu[1] + rho * c[1], 0.0])
            return value, bound * _terminal_sensitivities(transfer, derivative, before, row[None])[0]

        solution = minimize(
            fun,
            scaled,
            jac=True,
            method="L-BFGS-B",
            bounds=box,
            options={"maxiter": options.max_inner, "maxcor": 30, "ftol": 1e-15, "gtol": 1e-10},
        )
        scaled = np.clip(solution.x, -1.0, 1.0)
        iterations += solution.nit

        final = objective_and_constraints(_grid(bound, horizon, scaled, options.step))
        c = np.array([final.q2, final.q3])
        norm = float(np.linalg.norm(c))
        logger.debug("outer %d: q1T = %.10f, |c| = %.3e, rho = %.1e", outer, final.q1, norm, rho)
        if norm <= options.tol_feas:
            break

        mu = mu + rho * c
        if norm > options.required_decrease * previous:
            rho = min(rho * options.rho_growth, options.rho_max)
        previous = norm

    return scaled, iterations, rho


def _restore(bound, horizon, scaled, free, options):
    """Gauss-Newton minimum-norm correction of the free intervals onto q2(T) = q3(T) = 0."""
    x = scaled.copy()
    target = 1e-2 * options.tol_feas
    for _ in range(RESTORATION_STEPS):
        transfer, derivative = _interval_blocks(_grid(bound, horizon, x, options.step))
        before, final = _forward(transfer)
        c = final[1:3]
        norm = float(np.linalg.norm(c))
        if norm <= target:
            break
        jacobian = bound * _terminal_sensitivities(transfer, derivative, before, CONSTRAINT_WEIGHTS)[:, free]
        direction, *_ = np.linalg.lstsq(jacobian, -c, rcond=None)

        alpha = 1.0
        for _ in range(20):
            trial = x.copy()
            trial[free] = np.clip(x[free] + alpha * direction, -1.0, 1.0)
            candidate = objective_and_constraints(_grid(bound, horizon, trial, options.step))
            if math.hypot(candidate.q2, candidate.q3) < norm:
                x = trial
                break
            alpha *= 0.5
        else:
            break

    final = objective_and_constraints(_grid(bound, horizon, x, options.step))
    return x, math.hypot(final.q2, final.q3)


def _polish(bound, horizon, scaled, options):
    """
    Snap clustered intervals onto {-G, 0, +G} and restore feasibility.

    Only unclustered intervals and the intervals beside each level change stay
    free; if that fails the raw solution is restored on all intervals.
    """
    classification = classify_grid(bound * scaled, horizon, bound)
    snapped = classification.snapped / bound
    free = ~np.isin(snapped, (-1.0, 0.0, 1.0))
    changes = np.flatnonzero(snapped[1:] != snapped[:-1])
    free[changes] = True
    free[changes + 1] = True

    if np.any(free):
        polished, residual = _restore(bound, horizon, snapped, free, options)
        if residual <= options.tol_feas:
            return polished, residual

    return _restore(bound, horizon, scaled, np.ones_like(free), options)


def _starts(bound, horizon, size, options):
    """Yield (name, scaled controls) for every multi-start."""
    for index, profile in enumerate(options.warm_starts):
        yield f"warm-{index}", TranscriptionGrid.from_profile(profile, size, options.step).values / bound

    rng = np.random.default_rng(options.random_seed)
    third = horizon / 3.0
    for name in SEED_SETS[options.seed_set]:
        if name == "zero":
            yield name, np.zeros(size)
        elif name in ("plus", "minus"):
            sign = 1.0 if name == "plus" else -1.0
            profile = ControlProfile.from_switch_times(horizon, [third, 2 * third], [sign, -sign, sign], 1.0)
            yield name, TranscriptionGrid.from_profile(profile, size, options.step).values
        else:
            switches = np.sort(rng.uniform(0.0, horizon, size=int(rng.integers(2, 5))))
            sign = float(rng.choice([-1.0, 1.0]))
            controls = [sign * (-1.0) ** k for k in range(len(switches) + 1)]
            profile = ControlProfile.from_switch_times(horizon, switches, controls, 1.0)
            yield f"random-{len(switches)}", TranscriptionGrid.from_profile(profile, size, options.step).values


def solve_direct(bound, horizon, grid=DEFAULT_GRID, options=None):
    """
    Maximize squeezing by direct transcription.

    Each multi-start runs an augmented Lagrangian on q2(T) = q3(T) = 0 with
    bound-constrained L-BFGS-B inner solves, then snaps the bang and singular
    plateaus and restores feasibility. The feasible start with minimal q1(T)
    wins.

    :param float bound:               Control bound G
    :param float horizon:             Duration T
    :param int grid:                  Number of control intervals N
    :param DirectOptions options:     Solver settings
    :return SolveResult:              Result with the grid controls and a PMP report on the classified schedule
    :raises NoFeasibleSolutionError:  No start reached the constraint tolerance
    """
    options = options or DirectOptions()
    if not bound > 0:
        raise ValidationError(f"control bound must be positive, got {bound}")
    if horizon < 0:
        raise ValidationError(f"horizon must be nonnegative, got {horizon}")
    if grid < MIN_GRID:
        raise ValidationError(f"grid needs at least {MIN_GRID} intervals, got {grid}")
    if horizon == 0 or options.max_outer == 0:
        return zero_result(bound, horizon, "direct")

    started = time.perf_counter()
    best = None
    stats = SolverStats()
    for name, start in _starts(bound, horizon, grid, options):
        scaled, iterations, rho = _augmented_lagrangian(bound, horizon, start, options)
        scaled, residual = _polish(bound, horizon, scaled, options)
        stats.iterations += iterations
        stats.starts += 1
        final = objective_and_constraints(_grid(bound, horizon, scaled, options.step))
        logger.info("start %s: q1T = %.10f, residual = %.2e", name, final.q1, residual)
        if residual > options.tol_feas:
            continue
        if best is None or final.q1 < best[1].q1:
            best = (scaled, final, rho)

    if best is None:
        raise NoFeasibleSolutionError(
            f"no start reached |q2|, |q3| <= {options.tol_feas:.1e}; the zero profile is feasible with r = 0"
        )

    scaled, final, rho = best
    values = bound * scaled
    classification = classify_grid(values, horizon, bound)
    trajectory = integrate_reduced(classification.profile, step=options.step)
    stats.rho_final = rho
    stats.wall_ms = 1e3 * (time.perf_counter() - started)

    return SolveResult(
        profile=classification.profile,
        horizon=float(horizon),
        method="direct",
        structure=classification.structure,
        first_sign=classification.first_sign,
        q_final=final,
        r=r_from_final(final, options.tol_feas),
        pmp=verify_candidate(trajectory, GRID_TOLERANCES, strict=False),
        stats=stats,
        grid_values=values,
    )
