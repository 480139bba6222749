"""
Hyperpulse Framework.

Copyright 2024.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .dynamics import DEFAULT_STEP, reduced_rhs, reverse_cumulative_products, segment_steps
from .exceptions import InfeasibleEndpointError, UnderdeterminedError

logger = logging.getLogger(__name__)


class Costate(NamedTuple):
    """Adjoint variables (lambda1, lambda2, lambda3)."""

    l1: float
    l2: float
    l3: float

    @property
    def norm(self):
        """Return the Euclidean norm."""
        return math.sqrt(self.l1 * self.l1 + self.l2 * self.l2 + self.l3 * self.l3)


class ControlDecision(NamedTuple):
    """Outcome of the minimum principle at one instant."""

    g: float
    singular: bool


class SingularResiduals(NamedTuple):
    """Left-hand sides of the zero, first and second derivative switching conditions."""

    phi: float
    phi_dot: float
    phi_ddot: float


@dataclass(frozen=True)
class Tolerances:
    """
    Verification tolerances.

    :param float feas:              Allowed |q2(T)|, |q3(T)|
    :param float phi:               Allowed |Phi| on singular arcs and at switch instants
    :param float lc:                Legendre-Clebsch left-hand side must not exceed this
    :param float eps_phi_relative:  Dead zone of the control law, scaled by (1 + |lambda|)
    :param float costate_floor:     Smallest admissible costate norm
    """

    feas: float = 1e-8
    phi: float = 1e-5
    lc: float = 1e-9
    eps_phi_relative: float = 1e-6
    costate_floor: float = 1e-12


# classified grid profiles have switch instants accurate only to a fraction of a grid interval
GRID_TOLERANCES = Tolerances(feas=1e-4, phi=1e-3, lc=1e-9, eps_phi_relative=1e-3)


def _root(state):
    q1, q2, q3 = state
    return math.sqrt(1.0 + q1 * q1 + q2 * q2 + q3 * q3)


def control_hamiltonian(state, costate, g):
    """
    Return the control Hamiltonian lambda . dQ/dt.

    :param ReducedState state:  (q1, q2, q3)
    :param Costate costate:     (l1, l2, l3)
    :param float g:             Coupling
    :return float:              H_c
    """
    q1, q2, q3 = state
    l1, l2, l3 = costate
    root = _root(state)
    return 2.0 * g * (-l1 * root + l1 * q3 - l3 * q1) + 2.0 * (l2 * q3 - l3 * q2)


def costate_rhs(state, costate, g):
    """
    Return the adjoint derivatives -dH_c/dQ.

    :param ReducedState state:  (q1, q2, q3)
    :param Costate costate:     (l1, l2, l3)
    :param float g:             Coupling
    :return tuple:              (dl1, dl2, dl3)
    """
    q1, q2, q3 = state
    l1, l2, l3 = costate
    root = _root(state)
    return (
        2.0 * g * (l1 * q1 / root + l3),
        2.0 * (g * l1 * q2 / root + l3),
        2.0 * (g * (l1 * q3 / root - l1) - l2),
    )


def costate_matrices(states, controls):
    """
    Return B with dl/dt = B l, evaluated at many states.

    :param states:     Array (..., 3) of reduced states
    :param controls:   Array (...) of couplings
    :return:           Array (..., 3, 3)
    """
    states = np.asarray(states, dtype=float)
    g = np.asarray(controls, dtype=float)
    q1, q2, q3 = states[..., 0], states[..., 1], states[..., 2]
    root = np.sqrt(1.0 + q1 * q1 + q2 * q2 + q3 * q3)

    matrices = np.zeros((*states.shape[:-1], 3, 3))
    matrices[..., 0, 0] = 2.0 * g * q1 / root
    matrices[..., 0, 2] = 2.0 * g
    matrices[..., 1, 0] = 2.0 * g * q2 / root
    matrices[..., 1, 2] = 2.0
    matrices[..., 2, 0] = 2.0 * g * (q3 / root - 1.0)
    matrices[..., 2, 1] = -2.0
    return matrices


def switching_function(state, costate):
    """
    Return the coefficient of g in H_c / 2.

    :param ReducedState state:  (q1, q2, q3)
    :param Costate costate:     (l1, l2, l3)
    :return float:              Phi = -l1 (root - q3) - l3 q1
    """
    q1, _, q3 = state
    l1, _, l3 = costate
    return -l1 * (_root(state) - q3) - l3 * q1


def switching_function_rate(state, costate):
    """
    Return dPhi/dt along an extremal.

    The coupling-dependent terms cancel, leaving 2(-q2 l1 + q1 l2).

    :param ReducedState state:  (q1, q2, q3)
    :param Costate costate:     (l1, l2, l3)
    :return float:              Time derivative of the switching function
    """
    q1, q2, _ = state
    l1, l2, _ = costate
    return 2.0 * (-q2 * l1 + q1 * l2)


def dead_zone(costate, relative=Tolerances.eps_phi_relative):
    """Return relative * (1 + |lambda|) for one costate or for each row of an (n, 3) array."""
    return relative * (1.0 + np.linalg.norm(np.asarray(costate, dtype=float), axis=-1))


def pmp_control(phi, bound, eps_phi=None, costate=None):
    """
    Apply the minimum principle to a switching-function value.

    Without an explicit ``eps_phi`` the dead zone scales with the costate
    norm, see :func:`dead_zone`.

    :param float phi:         Switching function
    :param float bound:       Control bound G
    :param float eps_phi:     Dead zone treated as zero
    :param Costate costate:   Costate setting the default dead zone
    :return ControlDecision:  +G for phi < -eps, -G for phi > eps, singular otherwise
    """
    if eps_phi is None:
        eps_phi = dead_zone((0.0, 0.0, 0.0) if costate is None else costate)
    if phi < -eps_phi:
        return ControlDecision(bound, False)
    if phi > eps_phi:
        return ControlDecision(-bound, False)
    return ControlDecision(0.0, True)


def legendre_clebsch_lhs(state, costate):
    """
    Return the generalized Legendre-Clebsch left-hand side.

    Singular arcs need this to be nonpositive.

    :param ReducedState state:  (q1, q2, q3)
    :param Costate costate:     (l1, l2, l3)
    :return float:              l2 (q3 - root) - l3 q2
    """
    _, q2, q3 = state
    _, l2, l3 = costate
    return l2 * (q3 - _root(state)) - l3 * q2


def singular_conditions(state, costate, g=0.0):
    """
    Return the residuals of Phi = 0 and its first two time derivatives.

    Positive prefactors are dropped, so only the zero sets are meaningful.

    :param ReducedState state:  (q1, q2, q3)
    :param Costate costate:     (l1, l2, l3)
    :param float g:             Coupling entering the second derivative
    :return SingularResiduals:  (phi, phi_dot, phi_ddot)
    """
    q1, q2, q3 = state
    l1, l2, l3 = costate
    root = _root(state)
    return SingularResiduals(
        (root - q3) * l1 + q1 * l3,
        -q2 * l1 + q1 * l2,
        -q3 * l1 + g * (q3 - root) * l2 + (q1 - g * q2) * l3,
    )


def integrate_extremal(state, costate, g, duration, step=DEFAULT_STEP):
    """
    Integrate state and costate jointly under a constant coupling.

    :param ReducedState state:  Initial state
    :param Costate costate:     Initial costate
    :param float g:             Coupling
    :param float duration:      Integration length
    :param float step:          Step upper bound
    :return tuple:              (times, states, costates) arrays
    """

    def rhs(y):
        return np.array((*reduced_rhs(y[:3], g), *costate_rhs(y[:3], y[3:], g)))

    y = np.array((*state, *costate), dtype=float)
    h, count, last = segment_steps(duration, step)
    times = [0.0]
    rows = [y]
    for index in range(count + 1):
        dt = h if index < count else last
        k1 = rhs(y)
        k2 = rhs(y + 0.5 * dt * k1)
        k3 = rhs(y + 0.5 * dt * k2)
        k4 = rhs(y + dt * k3)
        y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        times.append((index + 1) * h if index < count else duration)
        rows.append(y)
    rows = np.array(rows)
    return np.array(times), rows[:, :3], rows[:, 3:]


class PmpSeries(NamedTuple):
    """Switching function and Legendre-Clebsch left-hand side at every sample."""

    times: np.ndarray
    controls: np.ndarray
    phi: np.ndarray
    lc: np.ndarray


@dataclass
class PmpReport:
    """
    Outcome of checking a candidate against the necessary conditions.

    ``series`` holds the sampled switching function for plotting and is not
    part of the JSON form.
    """

    verdict: str = "underdetermined"
    mu2: float = None
    mu3: float = None
    switch_times: list = field(default_factory=list)
    switch_phi_residuals: list = field(default_factory=list)
    bang_sign_ok: list = field(default_factory=list)
    max_abs_phi_singular: float = None
    max_lc_singular: float = None
    min_costate_norm: float = None
    endpoint_residual: float = None
    violations: list = field(default_factory=list)
    series: PmpSeries = None

    @property
    def passed(self):
        """Return True on pass, False on fail, None when underdetermined."""
        if self.verdict == "underdetermined":
            return None
        return self.verdict == "pass"

    def to_dict(self):
        """Return the JSON representation."""
        return {
            "mu2": self.mu2,
            "mu3": self.mu3,
            "switch_times": list(self.switch_times),
            "switch_phi_residuals": list(self.switch_phi_residuals),
            "bang_sign_ok": list(self.bang_sign_ok),
            "max_abs_phi_singular": self.max_abs_phi_singular,
            "max_lc_singular": self.max_lc_singular,
            "min_costate_norm": self.min_costate_norm,
            "endpoint_residual": self.endpoint_residual,
            "verdict": self.verdict,
            "violations": list(self.violations),
            "pass": self.passed,
        }


def _runs(controls):
    """Return (first interval, last interval, g) for each run of equal controls."""
    runs = []
    start = 0
    for index in range(1, len(controls) + 1):
        if index == len(controls) or controls[index] != controls[start]:
            runs.append((start, index - 1, float(controls[start])))
            start = index
    return runs


def _backward_costate_propagators(trajectory):
    """
    Return Psi with lambda(t_i) = Psi[i] @ lambda(T).

    Each backward step is a classic fourth-order step of the linear adjoint
    system; midpoint states are linear interpolations of the stored samples.
    """
    times = trajectory.times
    states = trajectory.states[:, :3]
    controls = trajectory.controls
    h = (times[:-1] - times[1:])[:, None, None]
    identity = np.eye(3)

    at_end = costate_matrices(states[1:], controls)
    at_mid = costate_matrices(0.5 * (states[1:] + states[:-1]), controls)
    at_start = costate_matrices(states[:-1], controls)

    k1 = at_end
    k2 = at_mid @ (identity + 0.5 * h * k1)
    k3 = at_mid @ (identity + 0.5 * h * k2)
    k4 = at_start @ (identity + h * k3)
    steps = identity + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    return np.concatenate((reverse_cumulative_products(steps), identity[None]), axis=0)


def verify_candidate(trajectory, tolerances=None, strict=True):
    """
    Check a candidate optimal control against the minimum principle.

    lambda1(T) is fixed to 1 and (mu2, mu3) = (lambda2(T), lambda3(T)) are
    fitted by least squares to Phi = 0 at every interior switch instant.
    The fitted costate is then checked for bang sign consistency, vanishing
    Phi and nonpositive Legendre-Clebsch left-hand side on singular arcs,
    and non-triviality. Violations name the segment they occur on.

    :param Trajectory trajectory:     Samples from integrate_reduced starting at the origin
    :param Tolerances tolerances:     Check tolerances
    :param bool strict:               Raise instead of reporting an infeasible endpoint or missing switches
    :return PmpReport:                Report
    :raises InfeasibleEndpointError:  Endpoint misses Q2 = Q3 = 0 and ``strict`` is set
    :raises UnderdeterminedError:     Fewer than two switch instants and ``strict`` is set
    """
    tolerances = tolerances or Tolerances()
    report = PmpReport()
    final = trajectory.final
    report.endpoint_residual = max(abs(final.q2), abs(final.q3))

    if report.endpoint_residual > tolerances.feas:
        message = f"endpoint: |q2(T)| = {abs(final.q2):.3e}, |q3(T)| = {abs(final.q3):.3e} exceed {tolerances.feas:.1e}"
        if strict:
            raise InfeasibleEndpointError(message)
        report.violations.append(message)

    controls = trajectory.controls
    runs = _runs(controls)
    switch_indices = [last + 1 for _, last, _ in runs[:-1]]
    report.switch_times = [float(trajectory.times[i]) for i in switch_indices]

    if len(switch_indices) < 2:
        message = f"{len(switch_indices)} switch condition(s): terminal multipliers are underdetermined"
        if strict:
            raise UnderdeterminedError(message)
        logger.warning("%s", message)
        report.verdict = "underdetermined"
        return report

    states = trajectory.states[:, :3]
    propagators = _backward_costate_propagators(trajectory)
    q1, q2, q3 = states[:, 0], states[:, 1], states[:, 2]
    root = np.sqrt(1.0 + np.sum(states * states, axis=1))
    gradient = np.column_stack((-(root - q3), np.zeros_like(q1), -q1))
    rows = np.einsum("ni,nij->nj", gradient, propagators)

    conditions = rows[switch_indices]
    mu, *_ = np.linalg.lstsq(conditions[:, 1:], -conditions[:, 0], rcond=None)
    terminal = np.array([1.0, mu[0], mu[1]])
    report.mu2, report.mu3 = float(mu[0]), float(mu[1])
    report.switch_phi_residuals = [float(x) for x in conditions @ terminal]

    phi = rows @ terminal
    costates = propagators @ terminal
    lc = costates[:, 1] * (q3 - root) - costates[:, 2] * q2
    eps = dead_zone(costates, tolerances.eps_phi_relative)
    report.min_costate_norm = float(np.linalg.norm(costates, axis=1).min())
    report.series = PmpSeries(trajectory.times, trajectory.sample_controls(), phi, lc)

    for index, residual in enumerate(report.switch_phi_residuals):
        if abs(residual) > tolerances.phi:
            instant = report.switch_times[index]
            report.violations.append(f"switch {index + 1} at t = {instant:.6f}: Phi = {residual:.3e}")

    if report.min_costate_norm < tolerances.costate_floor:
        report.violations.append(f"costate norm drops to {report.min_costate_norm:.3e}")

    singular_phi = []
    singular_lc = []
    bound = trajectory.bound
    for number, (first, last, g) in enumerate(runs, start=1):
        inside = slice(first + 1, last + 1)
        if abs(g) <= 1e-12 * bound:
            window = slice(first, last + 2)
            arc_phi = float(np.max(np.abs(phi[window])))
            arc_lc = float(np.max(lc[window]))
            singular_phi.append(arc_phi)
            singular_lc.append(arc_lc)
            if arc_phi > tolerances.phi:
                report.violations.append(f"segment {number} (singular): max |Phi| = {arc_phi:.3e}")
            if arc_lc > tolerances.lc:
                report.violations.append(f"segment {number} (singular): Legendre-Clebsch lhs reaches {arc_lc:.3e}")
            continue

        if abs(g) < bound * (1.0 - 1e-9):
            report.bang_sign_ok.append(False)
            report.violations.append(f"segment {number}: control {g:.6g} is neither a bang nor singular")
            continue

        decided = np.array([pmp_control(p, bound, e).g for p, e in zip(phi[inside], eps[inside])])
        wrong = np.sign(decided) == -np.sign(g)
        report.bang_sign_ok.append(not bool(np.any(wrong)))
        if np.any(wrong):
            sign = "+" if g > 0 else "-"
            report.violations.append(
                f"segment {number} (bang {sign}G): switching function has the wrong sign "
                f"on {int(np.sum(wrong))} samples"
            )

    if singular_phi:
        report.max_abs_phi_singular = max(singular_phi)
        report.max_lc_singular = max(singular_lc)

    report.verdict = "fail" if report.violations else "pass"
    logger.info("PMP verification %s (mu2 = %.6g, mu3 = %.6g)", report.verdict, report.mu2, report.mu3)
    return report
