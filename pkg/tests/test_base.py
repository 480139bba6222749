"""
Hyperpulse Framework.

Copyright 2024.
"""

import math

import numpy as np
import pytest

from hyperpulse.dynamics import ControlProfile, ReducedState
from hyperpulse.exceptions import ResultFormatError, ValidationError
from hyperpulse.solvers import SolveResult, classify_grid, select_best, structure_label, zero_result
from hyperpulse.solvers.direct import TranscriptionGrid


def result(segments, q1, bound=1.0):
    profile = ControlProfile(tuple(segments), bound)
    label, sign = structure_label(profile.controls, bound)
    return SolveResult(
        profile=profile,
        horizon=profile.horizon,
        method="switch",
        structure=label,
        first_sign=sign,
        q_final=ReducedState(q1, 0.0, 0.0),
        r=math.asinh(-q1) / 2.0,
    )


@pytest.mark.parametrize(
    "controls, bound, expected",
    [
        ([1.0, -1.0, 1.0], 1.0, ("BBB", 1)),
        ([-2.0, 2.0, 0.0, -2.0], 2.0, ("BBSB", -1)),
        ([2.0, -2.0, 0.0, -2.0], 2.0, ("BBSB", 1)),
        ([1.0, -1.0], 1.0, ("BB", 1)),
        ([0.0], 1.0, ("zero", 0)),
        ([], 1.0, ("zero", 0)),
        ([0.5, -1.0, 1.0], 1.0, ("other-grid", 1)),
        ([1.0, -1.0, 1.0, -1.0], 1.0, ("other-grid", 1)),
    ],
)
def test_structure_label(controls, bound, expected):
    assert structure_label(controls, bound) == expected


def test_classify_grid_recovers_switch_instants():
    # both switches fall in the middle of an interval
    profile = ControlProfile.from_switch_times(1.0, [0.30125, 0.70125], [1.0, -1.0, 1.0], 1.0)
    grid = TranscriptionGrid.from_profile(profile, 400)
    classification = classify_grid(grid.values, 1.0, 1.0)
    assert classification.structure == "BBB"
    assert classification.first_sign == 1
    np.testing.assert_allclose(classification.profile.switch_times, [0.30125, 0.70125], atol=1e-12)


def test_classify_grid_finds_the_singular_arc():
    profile = ControlProfile.from_switch_times(2.0, [0.4, 0.9, 1.5], [-2.0, 2.0, 0.0, -2.0], 2.0)
    values = TranscriptionGrid.from_profile(profile, 200).values
    values = values + 0.01 * np.sin(np.arange(200))
    classification = classify_grid(values, 2.0, 2.0)
    assert classification.structure == "BBSB"
    assert classification.first_sign == -1
    assert np.all(np.isin(classification.snapped, (-2.0, 0.0, 2.0)))
    np.testing.assert_allclose(classification.profile.switch_times, [0.4, 0.9, 1.5], atol=2e-2)


def test_classify_grid_without_plateaus():
    values = np.linspace(0.2, 0.7, 120)
    classification = classify_grid(values, 1.0, 1.0)
    assert classification.structure == "other-grid"
    assert len(classification.profile.segments) == 120


def test_select_best_prefers_fewer_segments_then_earlier_switches():
    three = result([(1.0, 1.0), (1.0, -1.0), (1.0, 1.0)], -2.0)
    four = result([(1.0, 1.0), (0.5, -1.0), (0.5, 0.0), (1.0, 1.0)], -2.0)
    later = result([(1.5, 1.0), (0.5, -1.0), (1.0, 1.0)], -2.0)
    better = result([(1.0, 1.0), (1.0, -1.0), (0.5, 0.0), (0.5, 1.0)], -2.5)

    assert select_best([four, later, three]) is three
    assert select_best([three, better]) is better
    with pytest.raises(ValidationError):
        select_best([])


def test_singular_fraction():
    assert result([(1.0, 1.0), (1.0, -1.0), (0.5, 0.0), (1.5, 1.0)], -1.0).singular_fraction == pytest.approx(0.125)
    assert zero_result(1.0, 2.0, "zero").singular_fraction == 0.0


def test_zero_result():
    baseline = zero_result(2.0, 1.5, "zero")
    assert baseline.r == 0.0
    assert baseline.structure == "zero"
    assert baseline.pmp.verdict == "underdetermined"
    assert zero_result(2.0, 0.0, "zero").profile.segments == ()


def test_result_dictionary(case_b):
    data = case_b.to_dict({"command": "solve"})
    for key in ("g_max", "T", "method", "structure", "first_sign", "switch_times", "r", "q_final"):
        assert key in data
    assert data["config"] == {"command": "solve"}
    assert data["pmp"]["pass"] is True
    assert set(data["stats"]) == {"iterations", "rho_final", "wall_ms", "starts"}
    assert data["objective_q1T"] == pytest.approx(-math.sinh(2.0 * case_b.r))

    rebuilt = SolveResult.from_dict(data)
    assert rebuilt.structure == "BBSB"
    np.testing.assert_allclose(rebuilt.switch_times, case_b.switch_times)
    assert rebuilt.profile.controls == case_b.profile.controls


DECREASING = {
    "g_max": 1.0,
    "T": 1.0,
    "method": "switch",
    "structure": "BBB",
    "first_sign": 1,
    "switch_times": [0.5, 0.2],
    "segment_controls": [1.0, -1.0, 1.0],
    "r": 0.1,
    "q_final": [0.0, 0.0, 0.0],
}


@pytest.mark.parametrize("data", [[], {"g_max": 1.0}, DECREASING])
def test_malformed_result_dictionary(data):
    with pytest.raises(ResultFormatError):
        SolveResult.from_dict(data)
