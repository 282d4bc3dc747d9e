"""Exception types shared across the package."""

from __future__ import annotations


class FifdimError(Exception):
    """Base class for all package errors."""


class ExpressionError(FifdimError):
    """Raised for syntax or semantic errors in expression text.

    ``position`` is the 0-based offset into the source text, or None when
    the error is not tied to a location (e.g. a bad piecewise table).
    """

    def __init__(self, message: str, position: int | None = None):
        self.position = position
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)


class CapacityError(FifdimError):
    """A requested grid or matrix exceeds the configured memory budget."""


class ModelValidationError(FifdimError):
    """Model hypotheses failed; ``violations`` lists every failure found."""

    def __init__(self, violations):
        self.violations = tuple(violations)
        lines = "; ".join(str(v) for v in self.violations)
        super().__init__(f"model validation failed: {lines}")


class InternalInconsistencyError(FifdimError):
    """Computed results contradict each other beyond numerical slack.

    This signals a bug (bad extrema, broken eigensolver, ...), not bad input.
    """


class InsufficientResolutionError(FifdimError):
    """Graph samples are too coarse for the requested box-count range."""
