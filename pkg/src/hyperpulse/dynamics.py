"""
Hyperpulse Framework.

Copyright 2024.
"""

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .exceptions import DivergenceError, SwitchTimeError, ValidationError

logger = logging.getLogger(__name__)

DEFAULT_STEP = 1e-4
MIN_STEPS_PER_SEGMENT = 16
BOUND_SLACK = 1e-12

# moment ordering used by every array in the package
MOMENT_NAMES = ("q1", "q2", "q3", "j0", "k1", "k2", "k3", "j1", "j2", "j3")


class ReducedState(NamedTuple):
    """Normalized expectation values of Q1, Q2 and Q3."""

    q1: float = 0.0
    q2: float = 0.0
    q3: float = 0.0

    @property
    def root(self):
        """Return sqrt(1 + q1^2 + q2^2 + q3^2), the J0 of the lifted point."""
        return math.sqrt(1.0 + self.q1 * self.q1 + self.q2 * self.q2 + self.q3 * self.q3)


class HyperboloidPoint(NamedTuple):
    """Contravariant four-vector (Q1, Q2, Q3, J0)."""

    q1: float
    q2: float
    q3: float
    j0: float

    def invariant_residual(self):
        """Return q1^2 + q2^2 + q3^2 - j0^2 + 1, zero on the hyperboloid."""
        return self.q1 * self.q1 + self.q2 * self.q2 + self.q3 * self.q3 - self.j0 * self.j0 + 1.0

    def reduced(self):
        """Return the (Q1, Q2, Q3) projection."""
        return ReducedState(self.q1, self.q2, self.q3)


class MomentVector(NamedTuple):
    """Normalized expectations of all ten Sp(4) generators."""

    q1: float
    q2: float
    q3: float
    j0: float
    k1: float
    k2: float
    k3: float
    j1: float
    j2: float
    j3: float

    @classmethod
    def vacuum(cls):
        """Return the moments of the two-mode vacuum."""
        return cls(0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)

    @classmethod
    def from_array(cls, values):
        """
        Build a moment vector from a length-10 sequence.

        :param values:          Moments in MOMENT_NAMES order
        :return MomentVector:   Moment vector
        """
        return cls(*(float(x) for x in values))

    @property
    def point(self):
        """Return the (Q1, Q2, Q3, J0) block."""
        return HyperboloidPoint(self.q1, self.q2, self.q3, self.j0)

    @property
    def null_block(self):
        """Return the (K1, K2, K3, J1, J2, J3) block."""
        return (self.k1, self.k2, self.k3, self.j1, self.j2, self.j3)


@dataclass(frozen=True)
class ControlProfile:
    """
    Piecewise-constant coupling schedule.

    ``segments`` is an ordered tuple of ``(duration, g)`` pairs, all durations
    positive and every ``|g| <= bound``. The empty profile has horizon 0.
    """

    segments: tuple = ()
    bound: float = 1.0

    def __post_init__(self):
        """Normalize and validate segments."""
        segments = tuple((float(duration), float(g)) for duration, g in self.segments)
        object.__setattr__(self, "segments", segments)
        object.__setattr__(self, "bound", float(self.bound))

        if not (self.bound > 0 and math.isfinite(self.bound)):
            raise ValidationError(f"control bound must be positive, got {self.bound}")

        for index, (duration, g) in enumerate(segments):
            if not (duration > 0 and math.isfinite(duration)):
                raise ValidationError(f"segment {index}: duration must be positive, got {duration}")
            if not abs(g) <= self.bound * (1.0 + BOUND_SLACK):
                raise ValidationError(f"segment {index}: |g| = {abs(g)} exceeds bound {self.bound}")

    @classmethod
    def constant(cls, g, duration, bound):
        """
        Return a single-segment profile.

        :param float g:          Coupling
        :param float duration:   Horizon
        :param float bound:      Control bound G
        :return ControlProfile:  Profile
        """
        if duration == 0:
            return cls((), bound)
        return cls(((duration, g),), bound)

    @classmethod
    def from_switch_times(cls, horizon, switch_times, controls, bound):
        """
        Build a profile from interior switch instants.

        Zero-width segments are dropped so degenerate structures collapse.

        :param float horizon:       Total duration T
        :param list switch_times:   Non-decreasing interior switch instants in [0, T]
        :param list controls:       One coupling value per segment (len(switch_times) + 1)
        :param float bound:         Control bound G
        :return ControlProfile:     Profile
        """
        switch_times = [float(x) for x in switch_times]
        controls = [float(x) for x in controls]
        if len(controls) != len(switch_times) + 1:
            raise ValidationError(f"expected {len(switch_times) + 1} controls, got {len(controls)}")

        boundaries = [0.0, *switch_times, float(horizon)]
        for left, right in zip(boundaries, boundaries[1:]):
            if right < left:
                raise SwitchTimeError(f"switch times must be non-decreasing within [0, {horizon}]: {switch_times}")

        segments = [
            (right - left, g) for left, right, g in zip(boundaries, boundaries[1:], controls) if right - left > 0
        ]
        return cls(tuple(segments), bound)

    @classmethod
    def from_grid(cls, values, horizon, bound):
        """
        Build a profile with equal-width intervals.

        :param values:           One coupling value per interval
        :param float horizon:    Total duration T
        :param float bound:      Control bound G
        :return ControlProfile:  Profile
        """
        values = np.asarray(values, dtype=float)
        width = horizon / len(values)
        return cls(tuple((width, g) for g in values), bound)

    @property
    def horizon(self):
        """Return the total duration."""
        return math.fsum(duration for duration, _ in self.segments)

    @property
    def boundaries(self):
        """Return segment boundaries including 0 and T."""
        return np.concatenate(([0.0], np.cumsum([duration for duration, _ in self.segments])))

    @property
    def switch_times(self):
        """Return interior segment boundaries."""
        return self.boundaries[1:-1]

    @property
    def controls(self):
        """Return the coupling value of each segment."""
        return tuple(g for _, g in self.segments)

    def value_at(self, t):
        """
        Return g(t), right-continuous at boundaries.

        :param float t:   Time in [0, T]
        :return float:    Coupling value
        """
        if not self.segments:
            return 0.0
        index = int(np.searchsorted(self.boundaries, t, side="right")) - 1
        return self.segments[min(max(index, 0), len(self.segments) - 1)][1]

    def padded(self, extra):
        """
        Return the profile followed by a zero-coupling segment.

        :param float extra:      Length of the appended segment
        :return ControlProfile:  Longer profile
        """
        if extra <= 0:
            return self
        return ControlProfile((*self.segments, (extra, 0.0)), self.bound)

    def split_at(self, times):
        """
        Insert extra boundaries without changing g.

        :param list times:       Instants in (0, T) to become boundaries
        :return ControlProfile:  Equivalent profile
        """
        cuts = sorted({float(t) for t in times if 0 < t < self.horizon})
        boundaries = self.boundaries
        segments = []
        for (left, right), (_, g) in zip(zip(boundaries, boundaries[1:]), self.segments):
            inner = [t for t in cuts if left < t < right]
            edges = [left, *inner, right]
            segments.extend((b - a, g) for a, b in zip(edges, edges[1:]) if b - a > 0)
        return ControlProfile(tuple(segments), self.bound)


@dataclass(frozen=True)
class Trajectory:
    """
    Sampled solution of the moment dynamics.

    ``states`` has three columns (reduced system) or ten (full moments);
    ``controls[i]`` is the coupling on ``[times[i], times[i + 1]]``.
    """

    times: np.ndarray
    states: np.ndarray
    controls: np.ndarray
    bound: float = 1.0

    @property
    def horizon(self):
        """Return the final sample time."""
        return float(self.times[-1])

    @property
    def final(self):
        """Return the final (Q1, Q2, Q3)."""
        return ReducedState(*(float(x) for x in self.states[-1, :3]))

    def hyperboloid_columns(self):
        """Return an (n, 4) array of (q1, q2, q3, j0) samples."""
        if self.states.shape[1] >= 4:
            return self.states[:, :4]
        q = self.states
        j0 = np.sqrt(1.0 + np.sum(q * q, axis=1))
        return np.column_stack((q, j0))

    def points(self):
        """Return the samples lifted to four-vectors."""
        return [HyperboloidPoint(*(float(x) for x in row)) for row in self.hyperboloid_columns()]

    def sample_controls(self):
        """Return the coupling at each sample (the value on the following interval)."""
        if len(self.controls) == 0:
            return np.zeros(len(self.times))
        return np.append(self.controls, self.controls[-1])


def segment_steps(duration, step=DEFAULT_STEP):
    """
    Return the fixed-step schedule for one constant-control segment.

    The step is ``min(step, duration / 16)`` and the final step is shortened
    so the segment ends exactly on its boundary.

    :param float duration:  Segment length (> 0)
    :param float step:      Upper bound on the step
    :return tuple:          (h, count, last): ``count`` steps of ``h`` then one step of ``last``
    """
    h = min(step, duration / MIN_STEPS_PER_SEGMENT)
    ratio = duration / h
    whole = round(ratio)
    if abs(ratio - whole) < 1e-9:
        count = int(whole) - 1
    else:
        count = int(math.floor(ratio))
    return h, count, duration - count * h


def reduced_rhs(state, g):
    """
    Return the time derivative of (Q1, Q2, Q3).

    :param state:     (q1, q2, q3)
    :param float g:   Coupling
    :return tuple:    (dq1, dq2, dq3)
    """
    q1, q2, q3 = state
    root = math.sqrt(1.0 + q1 * q1 + q2 * q2 + q3 * q3)
    return (-2.0 * g * (root - q3), 2.0 * q3, -2.0 * g * q1 - 2.0 * q2)


def full_moment_rhs(moments, g):
    """
    Return the time derivative of all ten generator expectations.

    :param MomentVector moments:  Current moments
    :param float g:               Coupling
    :return MomentVector:         Derivative
    """
    q1, q2, q3, j0, k1, k2, k3, j1, j2, j3 = moments
    return MomentVector(
        2.0 * g * q3 - 2.0 * g * j0,
        2.0 * q3,
        -2.0 * g * q1 - 2.0 * q2,
        -2.0 * g * q1,
        2.0 * g * k3,
        2.0 * k3 + 2.0 * g * j3,
        -2.0 * g * k1 - 2.0 * k2 - 2.0 * g * j2,
        2.0 * g * j3,
        -2.0 * g * k3 + 2.0 * j3,
        2.0 * g * k2 - 2.0 * g * j1 - 2.0 * j2,
    )


def _system_matrices():
    drift = np.zeros((10, 10))
    coupling = np.zeros((10, 10))
    basis = np.eye(10)
    for column in range(10):
        at_zero = np.array(full_moment_rhs(basis[column], 0.0))
        drift[:, column] = at_zero
        coupling[:, column] = np.array(full_moment_rhs(basis[column], 1.0)) - at_zero
    return drift, coupling


FULL_DRIFT, FULL_COUPLING = _system_matrices()
MOMENT_DRIFT = FULL_DRIFT[:4, :4].copy()
MOMENT_COUPLING = FULL_COUPLING[:4, :4].copy()


def moment_matrix(g, size=4):
    """
    Return the linear system matrix for coupling g.

    :param g:          Coupling (scalar or array)
    :param int size:   4 for the (Q, J0) block, 10 for all moments
    :return:           Matrix of shape (..., size, size)
    """
    drift, coupling = (MOMENT_DRIFT, MOMENT_COUPLING) if size == 4 else (FULL_DRIFT, FULL_COUPLING)
    g = np.asarray(g, dtype=float)
    return drift + g[..., None, None] * coupling


def rk4_polynomial(z):
    """
    Return the fourth-order Runge-Kutta amplification matrix for a linear system.

    For y' = A y one classic step of size h maps y to P(hA) y with
    P(Z) = I + Z + Z^2/2 + Z^3/6 + Z^4/24.

    :param z:   Array of shape (..., n, n) holding h*A
    :return:    P(z) with the same shape
    """
    identity = np.eye(z.shape[-1])
    result = identity + z / 4.0
    result = identity + (z @ result) / 3.0
    result = identity + (z @ result) / 2.0
    return identity + z @ result


def segment_propagator(g, duration, step=DEFAULT_STEP, size=4):
    """
    Return the matrix the fixed-step integrator applies over one segment.

    :param float g:         Coupling on the segment
    :param float duration:  Segment length
    :param float step:      Step upper bound
    :param int size:        4 or 10
    :return:                (size, size) transfer matrix
    """
    if duration <= 0:
        return np.eye(size)
    h, count, last = segment_steps(duration, step)
    matrix = moment_matrix(g, size)
    whole = np.linalg.matrix_power(rk4_polynomial(h * matrix), count)
    return rk4_polynomial(last * matrix) @ whole


def cumulative_products(matrices):
    """
    Return C with C[k] = M[k] @ M[k-1] @ ... @ M[0].

    Log-depth inclusive scan over the leading axis.

    :param matrices:   Array (n, m, m)
    :return:           Array (n, m, m)
    """
    products = np.array(matrices, dtype=float, copy=True)
    shift = 1
    while shift < len(products):
        products[shift:] = products[shift:] @ products[:-shift]
        shift *= 2
    return products


def reverse_cumulative_products(matrices):
    """
    Return S with S[k] = M[k] @ M[k+1] @ ... @ M[n-1].

    :param matrices:   Array (n, m, m)
    :return:           Array (n, m, m)
    """
    return cumulative_products(np.asarray(matrices)[::-1])[::-1]


def _reduced_rk4(q1, q2, q3, g, h):
    a1, a2, a3 = reduced_rhs((q1, q2, q3), g)
    half = 0.5 * h
    b1, b2, b3 = reduced_rhs((q1 + half * a1, q2 + half * a2, q3 + half * a3), g)
    c1, c2, c3 = reduced_rhs((q1 + half * b1, q2 + half * b2, q3 + half * b3), g)
    d1, d2, d3 = reduced_rhs((q1 + h * c1, q2 + h * c2, q3 + h * c3), g)
    sixth = h / 6.0
    return (
        q1 + sixth * (a1 + 2.0 * b1 + 2.0 * c1 + d1),
        q2 + sixth * (a2 + 2.0 * b2 + 2.0 * c2 + d2),
        q3 + sixth * (a3 + 2.0 * b3 + 2.0 * c3 + d3),
    )


def integrate_reduced(profile, start=None, step=DEFAULT_STEP):
    """
    Integrate the three-dimensional reduced system over a profile.

    Classic fixed-step fourth-order Runge-Kutta; the last step of every segment
    is shortened so no step crosses a control switch.

    :param ControlProfile profile:  Coupling schedule
    :param ReducedState start:      Initial state (default: origin)
    :param float step:              Step upper bound
    :return Trajectory:             Samples at every step and every boundary
    :raises DivergenceError:        The state became non-finite
    """
    if not step > 0:
        raise ValidationError(f"step must be positive, got {step}")

    q1, q2, q3 = start if start is not None else ReducedState()
    times = [0.0]
    rows = [(q1, q2, q3)]
    controls = []
    origin = 0.0

    for boundary, (duration, g) in zip(profile.boundaries[1:], profile.segments):
        h, count, last = segment_steps(duration, step)
        for index in range(count + 1):
            q1, q2, q3 = _reduced_rk4(q1, q2, q3, g, h if index < count else last)
            if not math.isfinite(q1 + q2 + q3):
                raise DivergenceError(f"reduced state diverged near t = {origin + index * h}")
            times.append(origin + (index + 1) * h if index < count else float(boundary))
            rows.append((q1, q2, q3))
            controls.append(g)
        origin = float(boundary)

    return Trajectory(np.array(times), np.array(rows, dtype=float), np.array(controls, dtype=float), profile.bound)


def integrate_full(profile, start=None, step=DEFAULT_STEP):
    """
    Integrate the linear ten-moment system over a profile.

    Same step rule as :func:`integrate_reduced`. The system is linear with
    constant coefficients on each segment, so a step is one product with the
    Runge-Kutta amplification matrix.

    :param ControlProfile profile:  Coupling schedule
    :param MomentVector start:      Initial moments (default: vacuum)
    :param float step:              Step upper bound
    :return Trajectory:             Ten-column samples
    :raises DivergenceError:        The moments became non-finite
    """
    if not step > 0:
        raise ValidationError(f"step must be positive, got {step}")

    moments = np.array(start if start is not None else MomentVector.vacuum(), dtype=float)
    times = [0.0]
    rows = [moments]
    controls = []
    origin = 0.0

    for boundary, (duration, g) in zip(profile.boundaries[1:], profile.segments):
        h, count, last = segment_steps(duration, step)
        matrix = moment_matrix(g, 10)
        full_step = rk4_polynomial(h * matrix)
        for index in range(count):
            moments = full_step @ moments
            times.append(origin + (index + 1) * h)
            rows.append(moments)
        moments = rk4_polynomial(last * matrix) @ moments
        times.append(float(boundary))
        rows.append(moments)
        controls.extend([g] * (count + 1))
        if not np.all(np.isfinite(moments)):
            raise DivergenceError(f"moments diverged in segment ending at t = {boundary}")
        origin = float(boundary)

    return Trajectory(np.array(times), np.array(rows, dtype=float), np.array(controls, dtype=float), profile.bound)
