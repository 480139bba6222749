"""
Hyperpulse Framework.

Copyright 2024.
"""

import math

import pytest

from hyperpulse.dynamics import integrate_reduced
from hyperpulse.solvers import solve_structured

CASE_A = (1.0, math.pi)
CASE_B = (2.0, math.pi / 2)


@pytest.fixture(scope="session")
def case_a():
    """Switch-time solution for G = 1, T = pi."""
    return solve_structured(*CASE_A)


@pytest.fixture(scope="session")
def case_b():
    """Switch-time solution for G = 2, T = pi/2."""
    return solve_structured(*CASE_B)


@pytest.fixture(scope="session")
def case_a_trajectory(case_a):
    return integrate_reduced(case_a.profile)


@pytest.fixture(scope="session")
def case_b_trajectory(case_b):
    return integrate_reduced(case_b.profile)
