"""
Hyperpulse Framework.

Copyright 2024.
"""

import math

import numpy as np
import pytest

from hyperpulse.dynamics import integrate_reduced
from hyperpulse.exceptions import SwitchTimeError, ValidationError
from hyperpulse.solvers.switching import (
    default_seeds,
    simulate_structure,
    solve_switch_times,
    structure_controls,
    structure_profile,
)


def test_structure_controls():
    assert structure_controls("BBB", 1, 2.0) == [2.0, -2.0, 2.0]
    assert structure_controls("BBB", -1, 1.0) == [-1.0, 1.0, -1.0]
    assert structure_controls("BBSB", 1, 2.0) == [2.0, -2.0, 0.0, 2.0]
    assert structure_controls("BBSB", 1, 2.0, final_sign=-1) == [2.0, -2.0, 0.0, -2.0]

    with pytest.raises(ValidationError):
        structure_controls("BSB", 1, 1.0)
    with pytest.raises(ValidationError):
        structure_controls("BBB", 0, 1.0)


def test_structure_profile_validates_switch_times():
    profile = structure_profile(1.0, 3.0, "BBSB", 1, [0.5, 1.5, 1.5])
    assert profile.controls == (1.0, -1.0, 1.0)

    with pytest.raises(SwitchTimeError):
        structure_profile(1.0, 3.0, "BBB", 1, [2.0, 1.0])
    with pytest.raises(SwitchTimeError):
        structure_profile(1.0, 3.0, "BBB", 1, [1.0, 4.0])
    with pytest.raises(ValidationError):
        structure_profile(1.0, 3.0, "BBB", 1, [1.0])


def test_default_seeds_are_ordered():
    for structure, count in (("BBB", 2), ("BBSB", 3)):
        seeds = default_seeds(structure, 2.0)
        assert seeds
        for seed in seeds:
            assert len(seed) == count
            assert list(seed) == sorted(seed)
            assert 0.0 < seed[0] and seed[-1] < 2.0


def test_simulate_structure_matches_integration(case_a):
    final, sensitivities = simulate_structure(
        case_a.g_max, case_a.horizon, "BBB", case_a.first_sign, case_a.switch_times
    )
    np.testing.assert_allclose(final, case_a.q_final, atol=1e-9)
    assert sensitivities.shape == (3, 2)
    assert np.all(np.isfinite(sensitivities))


def test_case_a_is_bang_bang_bang(case_a):
    assert case_a.method == "switch"
    assert case_a.structure == "BBB"
    assert case_a.r == pytest.approx(1.8990, abs=5e-3)
    assert max(case_a.residuals) <= 1e-8
    assert len(case_a.switch_times) == 2


def test_case_b_is_bang_bang_singular_bang(case_b):
    assert case_b.structure == "BBSB"
    assert case_b.r == pytest.approx(0.8336, abs=5e-3)
    assert max(case_b.residuals) <= 1e-8
    assert case_b.singular_fraction > 0
    durations = [d for d, g in case_b.profile.segments if g == 0]
    assert len(durations) == 1


def test_solutions_reproduce_on_reintegration(case_b):
    final = integrate_reduced(case_b.profile).final
    np.testing.assert_allclose(final, case_b.q_final, atol=1e-12)


def test_candidates_cover_both_structures_and_signs(case_b):
    records = {(c["structure"], c["first_sign"]) for c in case_b.candidates}
    assert records == {("BBB", 1), ("BBB", -1), ("BBSB", 1), ("BBSB", -1)}


def test_bad_problem_is_rejected():
    with pytest.raises(ValidationError):
        solve_switch_times(1.0, 0.0, "BBB", 1)
    with pytest.raises(ValidationError):
        solve_switch_times(-1.0, math.pi, "BBB", 1)
