"""
Hyperpulse Framework.

Copyright 2024.
"""

import math

import numpy as np
import pytest

from hyperpulse.dynamics import ControlProfile, integrate_full
from hyperpulse.entropy import entropy_of_squeezing
from hyperpulse.exceptions import TruncationBreachError, ValidationError
from hyperpulse.geometry import target_point
from hyperpulse.oracle import (
    LARGE_CUTOFF,
    LARGE_MOMENT_TOLERANCE,
    FockState,
    apply_hamiltonian,
    estimate_tail_mass,
    evolve,
    moments,
    reduced_entropy,
    run_oracle,
    squeezed_quadrature_variances,
    two_mode_squeezed_reference,
)

SQUEEZING = 0.5


def test_vacuum_moments():
    estimate = moments(FockState.vacuum(10))
    np.testing.assert_allclose(estimate.moments, [0, 0, 0, 1, 0, 0, 0, 0, 0, 0], atol=1e-15)
    assert estimate.truncation_error == 0.0
    assert estimate.max_imag == 0.0


def test_phased_reference_sits_on_the_target():
    estimate = moments(two_mode_squeezed_reference(SQUEEZING))
    np.testing.assert_allclose(estimate.moments.point, target_point(SQUEEZING), atol=1e-12)
    np.testing.assert_allclose(estimate.moments.null_block, 0.0, atol=1e-12)
    assert estimate.max_imag <= 1e-12


def test_unphased_reference_rotates_into_the_null_block():
    values = moments(two_mode_squeezed_reference(SQUEEZING, with_phase=False)).moments
    assert values.q1 == pytest.approx(0.0, abs=1e-12)
    assert abs(values.k1) == pytest.approx(math.sinh(2.0 * SQUEEZING), abs=1e-12)
    assert values.j0 == pytest.approx(math.cosh(2.0 * SQUEEZING), abs=1e-12)


def test_reference_entropy_and_variances():
    state = two_mode_squeezed_reference(SQUEEZING)
    assert reduced_entropy(state) == pytest.approx(entropy_of_squeezing(SQUEEZING), abs=1e-10)

    var_x, var_p, expected = squeezed_quadrature_variances(state, SQUEEZING)
    assert expected == pytest.approx(math.exp(-2.0 * SQUEEZING) / 2.0)
    assert var_x == pytest.approx(expected, abs=1e-10)
    assert var_p == pytest.approx(expected, abs=1e-10)


def test_vacuum_variances():
    var_x, var_p, expected = squeezed_quadrature_variances(FockState.vacuum(10))
    assert var_x == pytest.approx(0.5)
    assert var_p == pytest.approx(0.5)
    assert math.isnan(expected)


def test_reference_needs_enough_levels():
    with pytest.raises(TruncationBreachError):
        two_mode_squeezed_reference(1.5, na=20)
    with pytest.raises(ValidationError):
        two_mode_squeezed_reference(-0.1)


def test_hamiltonian_is_hermitian():
    rng = np.random.default_rng(3)
    shape = (7, 9)
    x = FockState(rng.normal(size=shape) + 1j * rng.normal(size=shape))
    y = FockState(rng.normal(size=shape) + 1j * rng.normal(size=shape))
    left = np.vdot(x.amplitudes, apply_hamiltonian(y, 0.7).amplitudes)
    right = np.vdot(apply_hamiltonian(x, 0.7).amplitudes, y.amplitudes)
    assert left == pytest.approx(right, abs=1e-12)


def test_evolve_follows_the_moment_equations():
    profile = ControlProfile.from_switch_times(0.6, [0.2, 0.4], [0.5, -0.5, 0.0], 0.5)
    state = evolve(FockState.vacuum(30), profile)
    assert abs(state.norm - 1.0) <= 1e-10
    expected = integrate_full(profile).states[-1]
    np.testing.assert_allclose(moments(state).moments, expected, atol=1e-8)


def test_evolve_guards_the_truncation():
    with pytest.raises(TruncationBreachError):
        evolve(FockState.vacuum(5), ControlProfile.constant(2.0, 1.0, 2.0))


def test_doubling_the_cutoffs_leaves_the_moments():
    profile = ControlProfile.from_switch_times(0.6, [0.2, 0.4], [0.5, -0.5, 0.0], 0.5)
    coarse = moments(evolve(FockState.vacuum(15), profile)).moments
    fine = moments(evolve(FockState.vacuum(30), profile)).moments
    np.testing.assert_allclose(coarse, fine, atol=1e-8)


def test_fock_state_validation():
    with pytest.raises(ValidationError):
        FockState(np.ones(5))
    with pytest.raises(ValidationError):
        FockState(np.ones((2, 5)))
    state = FockState.vacuum(4, 6)
    assert (state.na, state.nb) == (4, 6)
    assert state.norm == 1.0
    assert state.tail_mass() == 0.0


def test_tail_estimate():
    assert estimate_tail_mass(ControlProfile((), 1.0), 40) == 0.0
    assert estimate_tail_mass(ControlProfile.constant(0.0, 1.0, 1.0), 40) == 0.0


def test_zero_coupling_keeps_the_vacuum():
    report = run_oracle(ControlProfile.constant(0.0, 1.0, 1.0), na=10)
    assert report.max_moment_error <= 1e-12
    assert report.final_entropy == pytest.approx(0.0, abs=1e-12)
    assert report.r == 0.0
    assert report.checkpoints == 21


def test_case_b_matches_the_moment_equations(case_b):
    report = run_oracle(case_b.profile)
    assert report.max_moment_error <= 1e-6
    assert report.max_null_block <= 1e-6
    assert report.norm_drift <= 1e-8
    assert report.final_entropy == pytest.approx(entropy_of_squeezing(case_b.r), abs=1e-4)
    assert report.variance_error <= 1e-3
    assert report.within_thresholds()
    assert report.to_dict()["thresholds"].startswith("engineering choices")


def test_case_a_needs_a_larger_truncation(case_a):
    with pytest.raises(TruncationBreachError) as error:
        run_oracle(case_a.profile)
    assert "large-truncation" in str(error.value)


@pytest.mark.slow
def test_case_a_with_a_large_truncation(case_a):
    report = run_oracle(case_a.profile, na=LARGE_CUTOFF)
    assert report.max_moment_error <= LARGE_MOMENT_TOLERANCE
    assert report.within_thresholds(LARGE_MOMENT_TOLERANCE)
