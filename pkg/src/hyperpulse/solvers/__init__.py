"""
Hyperpulse Framework.

Copyright 2024.
"""

from .base import SolveResult, SolverStats, classify_grid, select_best, structure_label, zero_result
from .direct import DirectOptions, TranscriptionGrid, adjoint_gradient, objective_and_constraints, solve_direct
from .enumerate import (
    SweepRow,
    enumerate_candidates,
    minimum_time_for,
    solve,
    solve_structured,
    sweep,
    sweep_values,
)
from .switching import simulate_structure, solve_switch_times, structure_profile

__all__ = [
    "DirectOptions",
    "SolveResult",
    "SolverStats",
    "SweepRow",
    "TranscriptionGrid",
    "adjoint_gradient",
    "classify_grid",
    "enumerate_candidates",
    "minimum_time_for",
    "objective_and_constraints",
    "select_best",
    "simulate_structure",
    "solve",
    "solve_direct",
    "solve_structured",
    "solve_switch_times",
    "structure_label",
    "structure_profile",
    "sweep",
    "sweep_values",
    "zero_result",
]
