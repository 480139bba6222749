"""
Hyperpulse Framework.

Copyright 2024.
"""

import math

import numpy as np
import pytest

from hyperpulse.dynamics import ControlProfile, integrate_reduced
from hyperpulse.exceptions import ValidationError
from hyperpulse.solvers.direct import (
    DirectOptions,
    TranscriptionGrid,
    adjoint_gradient,
    objective_and_constraints,
    solve_direct,
)

BOUND = 2.0
HORIZON = math.pi / 2
SIZE = 200
WEIGHTS = (0.3, -0.2, 5.0)


def augmented(grid, weights=WEIGHTS):
    mu2, mu3, rho = weights
    q1, q2, q3 = objective_and_constraints(grid)
    return q1 + mu2 * q2 + mu3 * q3 + 0.5 * rho * (q2 * q2 + q3 * q3)


def test_grid_validation():
    with pytest.raises(ValidationError):
        TranscriptionGrid(BOUND, HORIZON, np.zeros(50))
    with pytest.raises(ValidationError):
        TranscriptionGrid(BOUND, 0.0, np.zeros(SIZE))
    with pytest.raises(ValidationError):
        TranscriptionGrid(0.0, HORIZON, np.zeros(SIZE))

    grid = TranscriptionGrid(BOUND, HORIZON, np.full(SIZE, 5.0))
    assert np.all(grid.values == BOUND)
    assert grid.width == pytest.approx(HORIZON / SIZE)


def test_from_profile_averages_intervals():
    profile = ControlProfile.from_switch_times(1.0, [0.255], [1.0, -1.0], 1.0)
    grid = TranscriptionGrid.from_profile(profile, 100)
    assert grid.values[24] == pytest.approx(1.0)
    assert grid.values[25] == pytest.approx(0.0, abs=1e-12)
    assert grid.values[26] == pytest.approx(-1.0)


def test_objective_matches_integration():
    rng = np.random.default_rng(11)
    grid = TranscriptionGrid(BOUND, HORIZON, rng.uniform(-BOUND, BOUND, SIZE))
    expected = integrate_reduced(ControlProfile.from_grid(grid.values, HORIZON, BOUND)).final
    np.testing.assert_allclose(objective_and_constraints(grid), expected, atol=1e-9)


@pytest.mark.parametrize("seed", range(20))
def test_adjoint_gradient_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    values = rng.uniform(-0.9 * BOUND, 0.9 * BOUND, SIZE)
    grid = TranscriptionGrid(BOUND, HORIZON, values)
    gradient = adjoint_gradient(grid, WEIGHTS)
    assert gradient.shape == (SIZE,)

    delta = 1e-6
    numeric = np.empty(SIZE)
    for k in range(SIZE):
        up, down = values.copy(), values.copy()
        up[k] += delta
        down[k] -= delta
        numeric[k] = (
            augmented(TranscriptionGrid(BOUND, HORIZON, up)) - augmented(TranscriptionGrid(BOUND, HORIZON, down))
        ) / (2.0 * delta)

    assert np.linalg.norm(gradient - numeric) <= 1e-6 * np.linalg.norm(numeric)


def test_objective_gradient_without_penalty():
    grid = TranscriptionGrid(BOUND, HORIZON, np.zeros(SIZE))
    gradient = adjoint_gradient(grid)
    # at the origin only q1 reacts to the coupling, with dq1/dg = -2 per unit time
    np.testing.assert_allclose(gradient, np.full(SIZE, -2.0 * HORIZON / SIZE), rtol=1e-9)


def test_options_validation():
    with pytest.raises(ValidationError):
        DirectOptions(seed_set="everything")
    with pytest.raises(ValidationError):
        DirectOptions(step=0.0)
    with pytest.raises(ValidationError):
        DirectOptions(seed_set="warm")
    assert DirectOptions(seed_set="warm", warm_starts=(ControlProfile.constant(1.0, 1.0, 1.0),)).seed_set == "warm"


def test_degenerate_problems_return_the_zero_profile():
    result = solve_direct(BOUND, 0.0)
    assert result.structure == "zero"
    assert result.r == 0.0
    assert result.profile.segments == ()

    result = solve_direct(BOUND, HORIZON, options=DirectOptions(max_outer=0))
    assert result.structure == "zero"
    assert result.method == "direct"
    assert result.r == 0.0


def test_bad_arguments():
    with pytest.raises(ValidationError):
        solve_direct(0.0, HORIZON)
    with pytest.raises(ValidationError):
        solve_direct(BOUND, -1.0)
    with pytest.raises(ValidationError):
        solve_direct(BOUND, HORIZON, grid=20)


def _plateau_share(result):
    bound = result.g_max
    levels = np.array([-bound, 0.0, bound])
    distance = np.min(np.abs(result.grid_values[:, None] - levels[None, :]), axis=1)
    return np.mean(distance <= 1e-3 * bound)


@pytest.mark.slow
def test_direct_case_b(case_b):
    result = solve_direct(2.0, math.pi / 2)
    assert result.structure == "BBSB"
    assert result.r == pytest.approx(case_b.r, abs=1e-3)
    assert max(result.residuals) <= 1e-8
    assert _plateau_share(result) >= 0.99
    assert result.stats.starts == 6


@pytest.mark.slow
def test_direct_case_a(case_a):
    result = solve_direct(1.0, math.pi)
    assert result.structure == "BBB"
    assert result.r == pytest.approx(case_a.r, abs=1e-3)
    assert max(result.residuals) <= 1e-8
    assert _plateau_share(result) >= 0.99
