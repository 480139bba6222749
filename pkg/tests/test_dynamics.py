"""
Hyperpulse Framework.

Copyright 2024.
"""

import math

import numpy as np
import pytest

from hyperpulse.dynamics import (
    ControlProfile,
    MomentVector,
    ReducedState,
    cumulative_products,
    full_moment_rhs,
    integrate_full,
    integrate_reduced,
    reduced_rhs,
    reverse_cumulative_products,
    segment_propagator,
    segment_steps,
)
from hyperpulse.exceptions import SwitchTimeError, ValidationError


def bbb(bound=1.0):
    return ControlProfile.from_switch_times(math.pi, [0.8, 2.1], [bound, -bound, bound], bound)


def test_origin_is_fixed_without_coupling():
    assert reduced_rhs((0.0, 0.0, 0.0), 0.0) == (0.0, 0.0, 0.0)
    assert reduced_rhs((0.0, 0.0, 0.0), 0.5) == (-1.0, 0.0, 0.0)


@pytest.mark.parametrize("g", [-2.0, 0.0, 0.7])
def test_full_moments_reduce_on_the_hyperboloid(g):
    state = ReducedState(0.3, -0.4, 1.2)
    moments = MomentVector(*state, state.root, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    full = full_moment_rhs(moments, g)
    np.testing.assert_allclose(full[:3], reduced_rhs(state, g), rtol=0, atol=1e-14)


@pytest.mark.parametrize(
    "duration, h, count",
    [
        (1.0, 1e-4, 9999),
        (1e-3, 1e-3 / 16, 15),
        (0.25, 1e-4, 2499),
    ],
)
def test_segment_steps_land_on_the_boundary(duration, h, count):
    step, whole, last = segment_steps(duration)
    assert step == pytest.approx(h)
    assert whole == count
    assert whole * step + last == pytest.approx(duration, abs=1e-15)
    assert 0 < last <= step * (1 + 1e-9)


def test_profile_rejects_bad_segments():
    with pytest.raises(ValidationError):
        ControlProfile(((-1.0, 0.0),), 1.0)
    with pytest.raises(ValidationError):
        ControlProfile(((1.0, 1.5),), 1.0)
    with pytest.raises(ValidationError):
        ControlProfile((), 0.0)


def test_profile_from_switch_times():
    profile = ControlProfile.from_switch_times(3.0, [1.0, 1.0, 2.0], [1.0, -1.0, 0.0, 1.0], 1.0)
    assert profile.segments == ((1.0, 1.0), (1.0, 0.0), (1.0, 1.0))
    assert profile.horizon == pytest.approx(3.0)
    np.testing.assert_allclose(profile.switch_times, [1.0, 2.0])

    with pytest.raises(SwitchTimeError):
        ControlProfile.from_switch_times(3.0, [2.0, 1.0], [1.0, -1.0, 1.0], 1.0)
    with pytest.raises(ValidationError):
        ControlProfile.from_switch_times(3.0, [1.0], [1.0], 1.0)


def test_profile_value_at_is_right_continuous():
    profile = bbb()
    assert profile.value_at(0.0) == 1.0
    assert profile.value_at(0.8) == -1.0
    assert profile.value_at(2.0) == -1.0
    assert profile.value_at(math.pi) == 1.0
    assert ControlProfile().value_at(0.3) == 0.0


def test_split_at_keeps_the_trajectory():
    profile = bbb()
    split = profile.split_at([0.3, 0.8, 1.7, 5.0])
    assert len(split.segments) == 5
    assert split.horizon == pytest.approx(profile.horizon)
    np.testing.assert_allclose(integrate_reduced(split).final, integrate_reduced(profile).final, atol=1e-10)


def test_reduced_and_full_integrators_agree():
    profile = bbb()
    reduced = integrate_reduced(profile)
    full = integrate_full(profile)
    np.testing.assert_allclose(reduced.times, full.times)
    np.testing.assert_allclose(reduced.states, full.states[:, :3], atol=1e-9)


def test_full_integration_conserves_the_invariant_and_null_block():
    trajectory = integrate_full(bbb())
    points = trajectory.states[:, :4]
    invariant = np.sum(points[:, :3] ** 2, axis=1) - points[:, 3] ** 2 + 1.0
    assert np.max(np.abs(invariant)) <= 1e-10
    assert np.max(np.abs(trajectory.states[:, 4:])) <= 1e-12


def test_segment_propagator_matches_stepping():
    profile = bbb()
    moments = np.array([0.0, 0.0, 0.0, 1.0])
    for duration, g in profile.segments:
        moments = segment_propagator(g, duration) @ moments
    expected = integrate_full(profile).states[-1, :4]
    np.testing.assert_allclose(moments, expected, rtol=1e-10, atol=1e-12)


def test_segment_propagator_of_empty_segment_is_identity():
    np.testing.assert_array_equal(segment_propagator(1.0, 0.0), np.eye(4))


def test_cumulative_products():
    rng = np.random.default_rng(3)
    matrices = rng.normal(size=(11, 3, 3))

    forward = cumulative_products(matrices)
    running = np.eye(3)
    for index, matrix in enumerate(matrices):
        running = matrix @ running
        np.testing.assert_allclose(forward[index], running, rtol=1e-10, atol=1e-12 * np.abs(running).max())

    backward = reverse_cumulative_products(matrices)
    running = np.eye(3)
    for index in reversed(range(len(matrices))):
        running = matrices[index] @ running
        np.testing.assert_allclose(backward[index], running, rtol=1e-10, atol=1e-12 * np.abs(running).max())


def test_trajectory_samples(case_b_trajectory):
    trajectory = case_b_trajectory
    assert len(trajectory.controls) == len(trajectory.times) - 1
    assert trajectory.horizon == pytest.approx(math.pi / 2)
    columns = trajectory.hyperboloid_columns()
    assert columns.shape == (len(trajectory.times), 4)
    assert np.all(columns[:, 3] >= 1.0)
    assert len(trajectory.sample_controls()) == len(trajectory.times)


def test_zero_padding_keeps_a_target_endpoint(case_b):
    padded = case_b.profile.padded(0.4)
    assert padded.horizon == pytest.approx(case_b.horizon + 0.4)
    np.testing.assert_allclose(integrate_reduced(padded).final, integrate_reduced(case_b.profile).final, atol=1e-9)
    assert case_b.profile.padded(0.0) is case_b.profile


def test_step_must_be_positive():
    with pytest.raises(ValidationError):
        integrate_reduced(bbb(), step=0.0)
    with pytest.raises(ValidationError):
        integrate_full(bbb(), step=-1.0)


def test_free_evolution_is_a_rotation():
    trajectory = integrate_reduced(ControlProfile.constant(0.0, math.pi / 4, 1.0), start=ReducedState(0.0, 1.0, 0.0))
    np.testing.assert_allclose(trajectory.final, (0.0, 0.0, -1.0), atol=1e-10)


def test_step_halving_shows_fourth_order(case_a):
    finals = [np.array(integrate_reduced(case_a.profile, step=h).final) for h in (0.02, 0.01, 0.005)]
    ratio = np.linalg.norm(finals[0] - finals[1]) / np.linalg.norm(finals[1] - finals[2])
    assert 14.0 <= ratio <= 18.0


@pytest.mark.parametrize("case", ["case_a", "case_b"])
def test_paper_cases_conserve_the_invariant_and_null_block(case, request):
    trajectory = integrate_full(request.getfixturevalue(case).profile)
    points = trajectory.states[:, :4]
    invariant = np.sum(points[:, :3] ** 2, axis=1) - points[:, 3] ** 2 + 1.0
    assert np.max(np.abs(invariant)) <= 1e-10
    assert np.max(np.abs(trajectory.states[:, 4:])) <= 1e-12
