"""
Hyperpulse Framework.

Copyright 2024.
"""


class HyperpulseError(Exception):
    """Base class for all hyperpulse errors."""


class ValidationError(HyperpulseError, ValueError):
    """An argument or value violates a documented invariant."""


class NotOnHyperboloidError(ValidationError):
    """A point does not lie on the upper sheet of the unit hyperboloid."""


class NotOnTargetError(ValidationError):
    """A final point has Q2 or Q3 away from zero."""


class NegativeSqueezingError(ValidationError):
    """A final point has Q1 > 0, which corresponds to no admissible squeezing."""


class SwitchTimeError(ValidationError):
    """Switch times are decreasing or fall outside [0, T]."""


class DivergenceError(HyperpulseError, ArithmeticError):
    """Integration produced a non-finite state."""


class InfeasibleEndpointError(HyperpulseError):
    """A candidate does not reach Q2(T) = Q3(T) = 0 within tolerance."""


class UnderdeterminedError(HyperpulseError):
    """Too few switch conditions to recover the terminal multipliers."""


class NoRootFoundError(HyperpulseError):
    """A pulse structure admits no root of its terminal conditions."""


class NoFeasibleSolutionError(HyperpulseError):
    """The direct solver exhausted its multi-starts without a feasible point."""


class TruncationBreachError(HyperpulseError):
    """Too much Fock-space amplitude reached the truncation edge."""


class ConfigError(HyperpulseError, ValueError):
    """Invalid run configuration."""


class ResultFormatError(HyperpulseError, ValueError):
    """A result file does not follow the SolveResult schema."""
