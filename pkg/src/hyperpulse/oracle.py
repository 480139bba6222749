"""
Hyperpulse Framework.

Copyright 2024.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.linalg import eigvalsh
from scipy.special import xlogy

from .dynamics import DEFAULT_STEP, MomentVector, integrate_reduced, segment_propagator, segment_steps
from .entropy import entanglement_entropy
from .exceptions import TruncationBreachError, ValidationError

logger = logging.getLogger(__name__)

DEFAULT_CUTOFF = 40
LARGE_CUTOFF = 200
TAIL_LIMIT = 1e-6
REFERENCE_TAIL = 1e-14
CHECKPOINTS = 20
MOMENT_TOLERANCE = 1e-6
LARGE_MOMENT_TOLERANCE = 1e-4
ENTROPY_TOLERANCE = 1e-4
VARIANCE_TOLERANCE = 1e-3


@dataclass(frozen=True)
class FockState:
    """Two-mode amplitudes c[n, m] on |n>_a |m>_b with n < Na, m < Nb."""

    amplitudes: np.ndarray

    def __post_init__(self):
        """Store a complex two-dimensional copy."""
        amplitudes = np.array(self.amplitudes, dtype=complex)
        if amplitudes.ndim != 2 or min(amplitudes.shape) < 3:
            raise ValidationError(f"amplitudes must be a 2-d array with both cutoffs >= 3, got {amplitudes.shape}")
        object.__setattr__(self, "amplitudes", amplitudes)

    @classmethod
    def vacuum(cls, na=DEFAULT_CUTOFF, nb=None):
        """Return |0, 0> with the given cutoffs."""
        amplitudes = np.zeros((na, nb or na), dtype=complex)
        amplitudes[0, 0] = 1.0
        return cls(amplitudes)

    @property
    def na(self):
        """Return the cutoff of mode a."""
        return self.amplitudes.shape[0]

    @property
    def nb(self):
        """Return the cutoff of mode b."""
        return self.amplitudes.shape[1]

    @property
    def norm(self):
        """Return the squared norm."""
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def tail_mass(self):
        """Return the probability in the top two levels of either mode."""
        weights = np.abs(self.amplitudes) ** 2
        edge = np.zeros(weights.shape, dtype=bool)
        edge[-2:, :] = True
        edge[:, -2:] = True
        return float(weights[edge].sum())


class MomentEstimate(NamedTuple):
    """Generator expectations with diagnostics."""

    moments: MomentVector
    truncation_error: float
    max_imag: float


class QuadratureVariances(NamedTuple):
    """Variances of the two squeezed quadrature combinations."""

    var_x: float
    var_p: float
    expected: float


def _raise(values, axis):
    out = np.zeros_like(values)
    root = np.sqrt(np.arange(1, values.shape[axis]))
    if axis == 0:
        out[1:, :] = root[:, None] * values[:-1, :]
    else:
        out[:, 1:] = root[None, :] * values[:, :-1]
    return out


def _lower(values, axis):
    out = np.zeros_like(values)
    root = np.sqrt(np.arange(1, values.shape[axis]))
    if axis == 0:
        out[:-1, :] = root[:, None] * values[1:, :]
    else:
        out[:, :-1] = root[None, :] * values[:, 1:]
    return out


def _number_diagonal(na, nb):
    return np.arange(nb)[None, :] - np.arange(na)[:, None]


def _apply(amplitudes, g, diagonal):
    position_a = _raise(amplitudes, 0) + _lower(amplitudes, 0)
    coupling = _raise(position_a, 1) + _lower(position_a, 1)
    return diagonal * amplitudes + g * coupling


def apply_hamiltonian(state, g):
    """
    Apply -n_a + n_b + g (a+ + a)(b+ + b) within the truncation.

    Amplitude pushed past either cutoff is dropped.

    :param FockState state:   State
    :param float g:           Coupling
    :return FockState:        Unnormalized image
    """
    return FockState(_apply(state.amplitudes, g, _number_diagonal(state.na, state.nb)))


def _evolve_segments(start, profile, step, tail_limit):
    """Yield the state after each segment of ``profile``."""
    amplitudes = start.amplitudes.copy()
    diagonal = _number_diagonal(start.na, start.nb)

    def rhs(values, g):
        return -1j * _apply(values, g, diagonal)

    for boundary, (duration, g) in zip(profile.boundaries[1:], profile.segments):
        h, count, last = segment_steps(duration, step)
        for index in range(count + 1):
            dt = h if index < count else last
            k1 = rhs(amplitudes, g)
            k2 = rhs(amplitudes + 0.5 * dt * k1, g)
            k3 = rhs(amplitudes + 0.5 * dt * k2, g)
            k4 = rhs(amplitudes + dt * k3, g)
            amplitudes = amplitudes + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        state = FockState(amplitudes)
        tail = state.tail_mass()
        if tail > tail_limit:
            raise TruncationBreachError(
                f"tail mass {tail:.2e} at t = {boundary:.6f} exceeds {tail_limit:.0e}; "
                f"enlarge the cutoffs (Na = {state.na}, Nb = {state.nb})"
            )
        yield float(boundary), state


def evolve(start, profile, step=DEFAULT_STEP, tail_limit=TAIL_LIMIT):
    """
    Integrate i d|psi>/dt = H|psi> over a coupling schedule.

    Same fixed-step fourth-order rule as the moment integrator, with steps
    landing exactly on every segment boundary.

    :param FockState start:          Initial state
    :param ControlProfile profile:   Coupling schedule
    :param float step:               Step upper bound
    :param float tail_limit:         Allowed tail mass after each segment
    :return FockState:               Final state
    :raises TruncationBreachError:   Too much amplitude at the cutoffs
    """
    state = start
    for _, state in _evolve_segments(start, profile, step, tail_limit):
        pass
    return state


def moments(state):
    """
    Return the ten generator expectations in the doubled normalization.

    :param FockState state:   State
    :return MomentEstimate:   Moments, truncation error estimate, largest imaginary part
    """
    psi = state.amplitudes
    weights = np.abs(psi) ** 2
    total = weights.sum()
    n_a = float(np.sum(weights * np.arange(state.na)[:, None]))
    n_b = float(np.sum(weights * np.arange(state.nb)[None, :]))

    def expect(values):
        return np.vdot(psi, values)

    ab = expect(_lower(_lower(psi, 0), 1))
    a_dag_b_dag = expect(_raise(_raise(psi, 0), 1))
    a_dag_b = expect(_raise(_lower(psi, 1), 0))
    a_b_dag = expect(_lower(_raise(psi, 1), 0))
    aa = expect(_lower(_lower(psi, 0), 0))
    a_dag_a_dag = expect(_raise(_raise(psi, 0), 0))
    bb = expect(_lower(_lower(psi, 1), 1))
    b_dag_b_dag = expect(_raise(_raise(psi, 1), 1))

    raw = {
        "q1": 1j * (a_dag_b_dag - ab),
        "q2": -0.5j * (a_dag_a_dag - aa - b_dag_b_dag + bb),
        "q3": -0.5 * (a_dag_a_dag + aa + b_dag_b_dag + bb),
        "j0": n_a + n_b + total,
        "k1": a_dag_b_dag + ab,
        "k2": -0.5 * (a_dag_a_dag + aa - b_dag_b_dag - bb),
        "k3": 0.5j * (a_dag_a_dag - aa + b_dag_b_dag - bb),
        "j1": n_a - n_b,
        "j2": a_dag_b + a_b_dag,
        "j3": -1j * (a_dag_b - a_b_dag),
    }
    values = MomentVector(*(float(np.real(raw[name])) for name in MomentVector._fields))
    max_imag = max(abs(float(np.imag(value))) for value in raw.values())
    truncation_error = state.tail_mass() * (state.na + state.nb)
    return MomentEstimate(values, truncation_error, max_imag)


def two_mode_squeezed_reference(r, with_phase=True, na=DEFAULT_CUTOFF, nb=None):
    """
    Return the truncated two-mode squeezed vacuum.

    The phased variant carries (-i)^n on |n, n>, which puts its moments on
    (-sinh 2r, 0, 0, cosh 2r).

    :param float r:                  Squeezing parameter (>= 0)
    :param bool with_phase:          Include the (-i)^n factors
    :param int na:                   Cutoff of mode a
    :param int nb:                   Cutoff of mode b (default: na)
    :return FockState:               Normalized Schmidt-diagonal state
    :raises TruncationBreachError:   tanh^(2 N) r exceeds 1e-14 for the smaller cutoff N
    """
    if r < 0:
        raise ValidationError(f"squeezing parameter must be nonnegative, got {r}")
    nb = nb or na
    levels = min(na, nb)
    ratio = math.tanh(r)
    if ratio ** (2 * levels) > REFERENCE_TAIL:
        raise TruncationBreachError(f"cutoff {levels} too small for r = {r}: tanh^(2N) r = {ratio ** (2 * levels):.2e}")

    n = np.arange(levels)
    coefficients = ratio**n / math.cosh(r) * ((-1j) ** n if with_phase else 1.0)
    amplitudes = np.zeros((na, nb), dtype=complex)
    amplitudes[n, n] = coefficients
    amplitudes /= np.linalg.norm(amplitudes)
    return FockState(amplitudes)


def reduced_entropy(state):
    """
    Return the von Neumann entropy of mode a.

    :param FockState state:   Pure two-mode state
    :return float:            -tr(rho_a ln rho_a)
    """
    psi = state.amplitudes
    rho = psi @ psi.conj().T
    eigenvalues = np.clip(eigvalsh(rho), 0.0, None)
    return float(-np.sum(xlogy(eigenvalues, eigenvalues)))


def _position(values, axis):
    return (_lower(values, axis) + _raise(values, axis)) / math.sqrt(2.0)


def _momentum(values, axis):
    return (_lower(values, axis) - _raise(values, axis)) / (1j * math.sqrt(2.0))


def squeezed_quadrature_variances(state, r=None):
    """
    Return the variances of (X_a + P_b)/sqrt 2 and (X_b + P_a)/sqrt 2.

    :param FockState state:     State
    :param float r:             Squeezing parameter setting the expected value e^(-2r)/2
    :return QuadratureVariances: (var_x, var_p, expected)
    """
    psi = state.amplitudes

    def variance(image):
        mean = np.vdot(psi, image).real
        return float(np.vdot(image, image).real - mean * mean)

    var_x = variance((_position(psi, 0) + _momentum(psi, 1)) / math.sqrt(2.0))
    var_p = variance((_position(psi, 1) + _momentum(psi, 0)) / math.sqrt(2.0))
    expected = math.exp(-2.0 * r) / 2.0 if r is not None else math.nan
    return QuadratureVariances(var_x, var_p, expected)


def estimate_tail_mass(profile, cutoff, step=DEFAULT_STEP):
    """
    Predict the probability at the top two levels of the smaller cutoff.

    Along a vacuum-seeded trajectory each mode is thermal with mean
    occupation (j0 - 1)/2; the worst point of the moment trajectory is used.

    :param ControlProfile profile:   Coupling schedule
    :param int cutoff:               Smaller cutoff
    :param float step:               Integrator step bound
    :return float:                   Predicted tail mass
    """
    if not profile.segments:
        return 0.0
    j0 = integrate_reduced(profile, step=step).hyperboloid_columns()[:, 3]
    occupation = max((float(np.max(j0)) - 1.0) / 2.0, 0.0)
    ratio = occupation / (occupation + 1.0)
    return ratio ** (cutoff - 2) * (1.0 - ratio * ratio)


@dataclass
class OracleReport:
    """Comparison of the Fock-space evolution with the moment equations."""

    na: int
    nb: int
    step: float
    checkpoints: int = 0
    max_moment_error: float = 0.0
    max_null_block: float = 0.0
    entropy_error: float = 0.0
    norm_drift: float = 0.0
    tail_mass: float = 0.0
    max_imag: float = 0.0
    final_entropy: float = 0.0
    r: float = 0.0
    variances: QuadratureVariances = None
    errors: list = field(default_factory=list)

    @property
    def variance_error(self):
        """Return the larger deviation of the quadrature variances from e^(-2r)/2."""
        if self.variances is None:
            return 0.0
        var_x, var_p, expected = self.variances
        return max(abs(var_x - expected), abs(var_p - expected))

    def within_thresholds(self, moment_tolerance=MOMENT_TOLERANCE):
        """Return True when the moment, entropy and variance errors are all acceptable."""
        return (
            self.max_moment_error <= moment_tolerance
            and self.entropy_error <= ENTROPY_TOLERANCE
            and self.variance_error <= VARIANCE_TOLERANCE
        )

    def to_dict(self):
        """Return the JSON representation."""
        return {
            "na": self.na,
            "nb": self.nb,
            "step": self.step,
            "checkpoints": self.checkpoints,
            "max_moment_error": self.max_moment_error,
            "max_null_block": self.max_null_block,
            "entropy_error": self.entropy_error,
            "norm_drift": self.norm_drift,
            "tail_mass": self.tail_mass,
            "max_imag": self.max_imag,
            "final_entropy": self.final_entropy,
            "r": self.r,
            "var_x": None if self.variances is None else self.variances.var_x,
            "var_p": None if self.variances is None else self.variances.var_p,
            "expected_variance": None if self.variances is None else self.variances.expected,
            "variance_error": self.variance_error,
            "thresholds": "engineering choices: moments 1e-6 (1e-4 large truncation), entropy 1e-4, variances 1e-3",
        }


def run_oracle(profile, na=DEFAULT_CUTOFF, nb=None, step=DEFAULT_STEP, checkpoints=CHECKPOINTS, tail_limit=TAIL_LIMIT):
    """
    Evolve the vacuum in Fock space and compare with the moment equations.

    Moments, null-block magnitude and reduced entropy are compared at
    ``checkpoints`` equally spaced instants; the quadrature variances are
    evaluated at the end against e^(-2r)/2 with r read off q1(T).

    :param ControlProfile profile:   Coupling schedule
    :param int na:                   Cutoff of mode a
    :param int nb:                   Cutoff of mode b (default: na)
    :param float step:               Step upper bound
    :param int checkpoints:          Number of comparison instants
    :param float tail_limit:         Allowed tail mass
    :return OracleReport:            Report
    :raises TruncationBreachError:   Predicted or measured tail mass above the limit
    """
    nb = nb or na
    predicted = estimate_tail_mass(profile, min(na, nb), step)
    if predicted > tail_limit:
        raise TruncationBreachError(
            f"predicted tail mass {predicted:.2e} at cutoff {min(na, nb)} exceeds {tail_limit:.0e}; "
            "rerun with larger cutoffs (--large-truncation or --na/--nb)"
        )
    logger.info("predicted tail mass %.2e at cutoff %d", predicted, min(na, nb))

    marks = np.linspace(0.0, profile.horizon, checkpoints + 1)[1:] if profile.horizon > 0 else np.array([])
    split = profile.split_at(marks)
    report = OracleReport(na=na, nb=nb, step=step)

    state = FockState.vacuum(na, nb)
    reference = np.array(MomentVector.vacuum())
    compared = [(0.0, state, reference)]
    for (boundary, state), (duration, g) in zip(_evolve_segments(state, split, step, tail_limit), split.segments):
        reference = segment_propagator(g, duration, step, size=10) @ reference
        if np.any(np.isclose(boundary, marks, rtol=0.0, atol=1e-12)):
            compared.append((boundary, state, reference))
    if compared[-1][1] is not state:
        compared.append((split.horizon, state, reference))

    for _, current, expected in compared:
        estimate = moments(current)
        actual = np.array(estimate.moments)
        report.checkpoints += 1
        report.max_moment_error = max(report.max_moment_error, float(np.max(np.abs(actual - expected))))
        report.max_null_block = max(report.max_null_block, float(np.max(np.abs(actual[4:]))))
        report.max_imag = max(report.max_imag, estimate.max_imag)
        report.norm_drift = max(report.norm_drift, abs(current.norm - 1.0))
        report.tail_mass = max(report.tail_mass, current.tail_mass())
        point = MomentVector.from_array(expected).point
        report.entropy_error = max(report.entropy_error, abs(reduced_entropy(current) - entanglement_entropy(point)))

    final_q1 = float(reference[0])
    report.r = math.asinh(max(-final_q1, 0.0)) / 2.0
    report.final_entropy = reduced_entropy(state)
    report.variances = squeezed_quadrature_variances(state, report.r)
    logger.info(
        "oracle: moment error %.2e, entropy error %.2e, variance error %.2e",
        report.max_moment_error,
        report.entropy_error,
        report.variance_error,
    )
    return report
