"""
Hyperpulse Framework.

Copyright 2024.
"""

import math

from scipy.special import xlogy

from .exceptions import ValidationError


def entropy_of_squeezing(r):
    """
    Return the entanglement entropy of a two-mode squeezed vacuum.

    :param float r:   Squeezing parameter (>= 0)
    :return float:    cosh^2 r ln cosh^2 r - sinh^2 r ln sinh^2 r (natural log)
    """
    if r < 0:
        raise ValidationError(f"squeezing parameter must be nonnegative, got {r}")
    x = math.sinh(r) ** 2
    return float((1.0 + x) * math.log1p(x) - xlogy(x, x))


def entropy_from_schmidt_series(r, tail=1e-12):
    """
    Sum -p_n ln p_n over the Schmidt probabilities tanh^(2n) r / cosh^2 r.

    :param float r:      Squeezing parameter (>= 0)
    :param float tail:   Stop once the remaining probability is below this
    :return float:       Entropy
    """
    if r < 0:
        raise ValidationError(f"squeezing parameter must be nonnegative, got {r}")
    ratio = math.tanh(r) ** 2
    probability = 1.0 / math.cosh(r) ** 2
    remaining = 1.0
    total = 0.0
    while remaining > tail and probability > 0:
        total -= probability * math.log(probability)
        remaining -= probability
        probability *= ratio
    return total


def symplectic_eigenvalue(point):
    """
    Return the single-mode symplectic eigenvalue of a vacuum-seeded state.

    :param HyperboloidPoint point:  Moments reached from the vacuum
    :return float:                  sqrt(1 + q1^2) / 2
    """
    return math.hypot(1.0, point.q1) / 2.0


def entanglement_entropy(point):
    """
    Return the von Neumann entropy of either mode.

    :param HyperboloidPoint point:  Moments reached from the vacuum
    :return float:                  (v + 1/2) ln(v + 1/2) - (v - 1/2) ln(v - 1/2)
    """
    nu = symplectic_eigenvalue(point)
    upper = nu + 0.5
    lower = max(nu - 0.5, 0.0)
    return float(xlogy(upper, upper) - xlogy(lower, lower))
