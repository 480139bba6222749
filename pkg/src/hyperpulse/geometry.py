"""
Hyperpulse Framework.

Copyright 2024.
"""

import math

from .dynamics import HyperboloidPoint, ReducedState
from .exceptions import NegativeSqueezingError, NotOnHyperboloidError, NotOnTargetError

HYPERBOLOID_TOLERANCE = 1e-8
SERIES_THRESHOLD = 1e-8

ORIGIN = HyperboloidPoint(0.0, 0.0, 0.0, 1.0)


def lift(state):
    """
    Lift a reduced state onto the upper sheet of the hyperboloid.

    :param ReducedState state:  (q1, q2, q3)
    :return HyperboloidPoint:   (q1, q2, q3, sqrt(1 + q1^2 + q2^2 + q3^2))
    """
    q1, q2, q3 = state
    return HyperboloidPoint(q1, q2, q3, math.sqrt(1.0 + q1 * q1 + q2 * q2 + q3 * q3))


def target_point(r):
    """
    Return the moments of the phased two-mode squeezed target.

    :param float r:            Squeezing parameter
    :return HyperboloidPoint:  (-sinh 2r, 0, 0, cosh 2r)
    """
    return HyperboloidPoint(-math.sinh(2.0 * r), 0.0, 0.0, math.cosh(2.0 * r))


def check_on_hyperboloid(point, tolerance=HYPERBOLOID_TOLERANCE):
    """
    Validate upper-sheet membership.

    :param HyperboloidPoint point:   Point to check
    :param float tolerance:          Allowed invariant residual
    :raises NotOnHyperboloidError:   Invariant or sheet violated
    """
    residual = point.invariant_residual()
    if not abs(residual) <= tolerance:
        raise NotOnHyperboloidError(f"point {tuple(point)} misses the hyperboloid by {residual:.3e}")
    if point.j0 < 1.0 - tolerance:
        raise NotOnHyperboloidError(f"point {tuple(point)} lies below the upper sheet (j0 < 1)")


def minkowski_dot(a, b):
    """
    Return the Minkowski product a^mu b_mu with signature (+, +, +, -).

    :param HyperboloidPoint a:      First point
    :param HyperboloidPoint b:      Second point
    :return float:                  Product, at most -1 for points on H^3
    :raises NotOnHyperboloidError:  Either argument is off the hyperboloid
    """
    check_on_hyperboloid(a)
    check_on_hyperboloid(b)
    return a.q1 * b.q1 + a.q2 * b.q2 + a.q3 * b.q3 - a.j0 * b.j0


def geodesic_distance(a, b):
    """
    Return the hyperbolic distance arccosh(-a.b).

    Near coincident points the arccosh is replaced by its series in
    u = -a.b - 1, which keeps full relative precision.

    :param HyperboloidPoint a:  First point
    :param HyperboloidPoint b:  Second point
    :return float:              Nonnegative distance
    """
    u = max(-minkowski_dot(a, b) - 1.0, 0.0)
    if u < SERIES_THRESHOLD:
        return math.sqrt(2.0 * u) * (1.0 - u / 12.0)
    return math.acosh(1.0 + u)


def speed_sq(point, g):
    """
    Return the squared Minkowski speed of the flow through a point.

    :param HyperboloidPoint point:  Point on H^3
    :param float g:                 Coupling
    :return float:                  4{g^2 (q3 - j0)^2 + 2 g q1 q2 + q2^2 + q3^2}
    """
    q1, q2, q3, j0 = point
    return 4.0 * (g * g * (q3 - j0) ** 2 + 2.0 * g * q1 * q2 + q2 * q2 + q3 * q3)


def constant_coupling_gap(g, r):
    """
    Return how much a constant pulse would have to change its speed to reach the target.

    A constant coupling conserves the squared speed, yet the speed at the
    target exceeds the speed at the origin unless r = 0.

    :param float g:   Constant coupling
    :param float r:   Squeezing parameter of the target
    :return float:    speed_sq(target, g) - speed_sq(origin, g)
    """
    return speed_sq(target_point(r), g) - speed_sq(ORIGIN, g)


def r_from_final(point, tol=1e-8):
    """
    Return the squeezing parameter of a final point on the target manifold.

    :param HyperboloidPoint point:   Final point
    :param float tol:                Allowed |q2|, |q3| and positive q1
    :return float:                   r = asinh(-q1) / 2
    :raises NotOnTargetError:        |q2| or |q3| exceeds tol
    :raises NegativeSqueezingError:  q1 > tol
    """
    if isinstance(point, ReducedState):
        point = lift(point)
    if abs(point.q2) > tol or abs(point.q3) > tol:
        raise NotOnTargetError(f"final point not on target manifold: q2 = {point.q2:.3e}, q3 = {point.q3:.3e}")
    if point.q1 > tol:
        raise NegativeSqueezingError(f"final q1 = {point.q1:.3e} is positive")
    return math.asinh(max(-point.q1, 0.0)) / 2.0
