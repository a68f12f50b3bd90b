"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class StableCapError(Exception):
    """Base class for every error raised by this package."""


class ArgumentError(StableCapError, ValueError):
    """Bad dimensions, indices, or a bound applied to the wrong kind of input."""


class ValidationError(StableCapError, ValueError):
    """Input data violates a structural invariant (negative coefficient, non-PSD matrix...)."""


class CapacityGuardError(StableCapError):
    """A desk-scale size limit (expansion, enumeration, LP support) was exceeded."""


class NumericError(StableCapError, ArithmeticError):
    """A numerical procedure produced an untrustworthy result."""


class ConvergenceError(NumericError):
    """An iterative solver hit its iteration cap.

    ``last_iterate`` and ``diagnostics`` describe where it stopped.
    """

    def __init__(self, message: str, last_iterate=None, diagnostics: dict | None = None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.diagnostics = diagnostics or {}


class NotAttainedError(StableCapError):
    """The capacity infimum is not attained, so no scaling to doubly-stochastic form exists."""


class PreconditionError(StableCapError, ValueError):
    """An operation's mathematical precondition does not hold for this input."""
