"""
Hyperpulse Framework.

Copyright 2024.
"""

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from ..dynamics import DEFAULT_STEP, ControlProfile, ReducedState, integrate_reduced
from ..exceptions import ResultFormatError, ValidationError
from ..geometry import r_from_final
from ..pmp import PmpReport, verify_candidate

STRUCTURES = ("BBB", "BBSB", "BB", "other-grid", "zero")
CLUSTER_THRESHOLD = 0.05
MIN_RUN = 3
TIE_TOLERANCE = 1e-9

REQUIRED_KEYS = ("g_max", "T", "method", "structure", "first_sign", "switch_times", "segment_controls", "r", "q_final")


@dataclass
class SolverStats:
    """Bookkeeping reported with every result."""

    iterations: int = 0
    rho_final: float = None
    wall_ms: float = 0.0
    starts: int = 0

    def to_dict(self):
        """Return the JSON representation."""
        return {
            "iterations": int(self.iterations),
            "rho_final": self.rho_final,
            "wall_ms": float(self.wall_ms),
            "starts": int(self.starts),
        }


@dataclass
class SolveResult:
    """
    Outcome of one solve.

    ``profile`` is the bang/singular schedule; direct solves also keep the raw
    per-interval controls in ``grid_values``, from which ``q_final`` was computed.
    """

    profile: ControlProfile
    horizon: float
    method: str
    structure: str
    first_sign: int
    q_final: ReducedState
    r: float
    pmp: PmpReport = None
    stats: SolverStats = field(default_factory=SolverStats)
    grid_values: np.ndarray = None
    candidates: list = field(default_factory=list)

    @property
    def g_max(self):
        """Return the control bound."""
        return self.profile.bound

    @property
    def switch_times(self):
        """Return the interior switch instants of the schedule."""
        return [float(x) for x in self.profile.switch_times]

    @property
    def objective(self):
        """Return q1(T)."""
        return self.q_final.q1

    @property
    def residuals(self):
        """Return (|q2(T)|, |q3(T)|)."""
        return abs(self.q_final.q2), abs(self.q_final.q3)

    @property
    def singular_fraction(self):
        """Return the share of the horizon spent at g = 0."""
        if self.horizon <= 0 or self.structure == "zero":
            return 0.0
        idle = math.fsum(duration for duration, g in self.profile.segments if g == 0)
        return idle / self.horizon

    def summary(self):
        """Return the short form recorded for losing candidates."""
        return {
            "method": self.method,
            "structure": self.structure,
            "first_sign": self.first_sign,
            "switch_times": self.switch_times,
            "r": self.r,
            "objective_q1T": self.objective,
        }

    def to_dict(self, config=None):
        """
        Return the result file representation.

        :param dict config:   Effective run configuration to echo
        :return dict:         JSON-ready mapping
        """
        residual_q2, residual_q3 = self.residuals
        data = {
            "g_max": self.g_max,
            "T": self.horizon,
            "method": self.method,
            "structure": self.structure,
            "first_sign": self.first_sign,
            "switch_times": self.switch_times,
            "segment_controls": list(self.profile.controls),
            "grid_controls": None if self.grid_values is None else [float(x) for x in self.grid_values],
            "r": self.r,
            "q_final": list(self.q_final),
            "residual_q2": residual_q2,
            "residual_q3": residual_q3,
            "objective_q1T": self.objective,
            "singular_fraction": self.singular_fraction,
            "pmp": None if self.pmp is None else self.pmp.to_dict(),
            "stats": self.stats.to_dict(),
            "candidates": list(self.candidates),
        }
        if config is not None:
            data["config"] = config
        return data

    @classmethod
    def from_dict(cls, data):
        """
        Rebuild a result from its file representation.

        The PMP report is not restored; callers re-verify.

        :param dict data:            Parsed JSON
        :return SolveResult:         Result
        :raises ResultFormatError:   Missing keys or inconsistent values
        """
        if not isinstance(data, dict):
            raise ResultFormatError("result file must hold a JSON object")
        missing = [key for key in REQUIRED_KEYS if key not in data]
        if missing:
            raise ResultFormatError(f"result file lacks keys: {', '.join(missing)}")

        try:
            bound = float(data["g_max"])
            horizon = float(data["T"])
            profile = schedule_profile(horizon, data["switch_times"], data["segment_controls"], bound)
            grid = data.get("grid_controls")
            q_final = ReducedState(*(float(x) for x in data["q_final"]))
            return cls(
                profile=profile,
                horizon=horizon,
                method=str(data["method"]),
                structure=str(data["structure"]),
                first_sign=int(data["first_sign"]),
                q_final=q_final,
                r=float(data["r"]),
                grid_values=None if grid is None else np.asarray(grid, dtype=float),
            )
        except (TypeError, ValidationError) as exc:
            raise ResultFormatError(f"malformed result file: {exc}") from exc


class Classification(NamedTuple):
    """Bang/singular reading of a grid control."""

    structure: str
    first_sign: int
    profile: ControlProfile
    snapped: np.ndarray


def schedule_profile(horizon, switch_times, controls, bound):
    """Return the profile for a switch-time schedule, empty when there are no segments or no horizon."""
    if horizon <= 0 or not controls:
        return ControlProfile((), bound)
    return ControlProfile.from_switch_times(horizon, switch_times, controls, bound)


def structure_label(controls, bound):
    """
    Name the pulse sequence of a list of segment couplings.

    :param list controls:   Coupling per segment
    :param float bound:     Control bound G
    :return tuple:          (label, first_sign)
    """
    symbols = [0 if g == 0 else (1 if g > 0 else -1) for g in controls]
    if not symbols or all(s == 0 for s in symbols):
        return "zero", 0
    bangs = all(s != 0 and abs(g) >= bound * (1.0 - 1e-9) for s, g in zip(symbols, controls))
    first = symbols[0]
    alternating = all(a == -b for a, b in zip(symbols, symbols[1:]))
    if bangs and alternating and len(symbols) == 2:
        return "BB", first
    if bangs and alternating and len(symbols) == 3:
        return "BBB", first
    if (
        len(symbols) == 4
        and first != 0
        and symbols[1] == -first
        and symbols[2] == 0
        and symbols[3] != 0
        and all(abs(controls[i]) >= bound * (1.0 - 1e-9) for i in (0, 1, 3))
    ):
        return "BBSB", first
    return "other-grid", first


def _runs(labels):
    runs = []
    start = 0
    for index in range(1, len(labels) + 1):
        if index == len(labels) or labels[index] != labels[start]:
            runs.append([start, index, labels[start]])
            start = index
    return runs


def classify_grid(values, horizon, bound, threshold=CLUSTER_THRESHOLD):
    """
    Read a bang/singular schedule off a grid control.

    Each interval is clustered to the nearest of {-G, 0, +G} when within
    ``threshold * G``; short clustered runs and unclustered intervals become
    transitions, and the switch instant inside a transition is placed where
    the interval average puts it.

    :param values:            One coupling per interval
    :param float horizon:     Total duration T
    :param float bound:       Control bound G
    :param float threshold:   Clustering radius relative to G
    :return Classification:   Label, first sign, schedule and snapped grid values
    """
    values = np.asarray(values, dtype=float)
    width = horizon / len(values)
    levels = np.array([-bound, 0.0, bound])
    distance = np.abs(values[:, None] - levels[None, :])
    nearest = np.argmin(distance, axis=1)
    clustered = distance[np.arange(len(values)), nearest] <= threshold * bound

    labels = np.where(clustered, nearest, -1)
    for start, stop, label in _runs(labels.tolist()):
        if label >= 0 and stop - start < MIN_RUN:
            labels[start:stop] = -1

    snapped = values.copy()
    snapped[labels >= 0] = levels[labels[labels >= 0]]

    runs = [run for run in _runs(labels.tolist()) if run[2] >= 0]
    merged = []
    for run in runs:
        if merged and merged[-1][2] == run[2]:
            merged[-1][1] = run[1]
        else:
            merged.append(run)

    if not merged:
        profile = ControlProfile.from_grid(values, horizon, bound)
        return Classification("other-grid", int(np.sign(values[0])), profile, snapped)

    switch_times = []
    for left, right in zip(merged, merged[1:]):
        a, b = levels[left[2]], levels[right[2]]
        gap = values[left[1] : right[0]]
        share = float(np.sum(np.clip((gap - b) / (a - b), 0.0, 1.0)))
        switch_times.append((left[1] + share) * width)

    controls = [float(levels[run[2]]) for run in merged]
    profile = ControlProfile.from_switch_times(horizon, switch_times, controls, bound)
    structure, first_sign = structure_label(profile.controls, bound)
    return Classification(structure, first_sign, profile, snapped)


def select_best(results):
    """
    Return the result with minimal q1(T).

    Results whose q1(T) agree within a relative 1e-9 are ordered by segment
    count, then by the first switch instant.

    :param list results:   Candidate results
    :return SolveResult:   Winner
    """
    results = list(results)
    if not results:
        raise ValidationError("no candidates to select from")
    best = min(result.objective for result in results)
    tied = [result for result in results if result.objective <= best + TIE_TOLERANCE * (1.0 + abs(best))]

    def order(result):
        first = result.switch_times[0] if result.switch_times else math.inf
        return (len(result.profile.segments), first)

    return min(tied, key=order)


def zero_result(bound, horizon, method):
    """
    Return the feasible zero-control baseline.

    :param float bound:     Control bound G
    :param float horizon:   Duration T
    :param str method:      Method label to record
    :return SolveResult:    Result with r = 0
    """
    profile = ControlProfile.constant(0.0, horizon, bound)
    report = verify_candidate(integrate_reduced(profile), strict=False)
    return SolveResult(
        profile=profile,
        horizon=float(horizon),
        method=method,
        structure="zero",
        first_sign=0,
        q_final=ReducedState(),
        r=0.0,
        pmp=report,
    )


def result_from_schedule(profile, method, structure, first_sign, step=DEFAULT_STEP, tol_feas=1e-8, tolerances=None):
    """
    Simulate a schedule and package it as a result.

    :param ControlProfile profile:  Schedule
    :param str method:              Method label
    :param str structure:           Structure label
    :param int first_sign:          Sign of the first bang
    :param float step:              Integrator step bound
    :param float tol_feas:          Endpoint tolerance for r
    :param Tolerances tolerances:   Verification tolerances
    :return SolveResult:            Result with an attached PMP report
    """
    trajectory = integrate_reduced(profile, step=step)
    final = trajectory.final
    return SolveResult(
        profile=profile,
        horizon=profile.horizon,
        method=method,
        structure=structure,
        first_sign=first_sign,
        q_final=final,
        r=r_from_final(final, tol_feas),
        pmp=verify_candidate(trajectory, tolerances, strict=False),
    )
