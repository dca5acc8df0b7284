"""Exception types shared across the package."""


class QubitBathError(Exception):
    """Base class for all package errors."""


class ValidationError(QubitBathError):
    """Input violates a structural invariant (hermiticity, shape, schema)."""


class DomainError(QubitBathError):
    """Parameter outside the physically meaningful domain."""


class ResourceLimitError(QubitBathError):
    """Request exceeds the hard size cap (raised before allocation)."""


class IntegrationError(QubitBathError):
    """Time integration failed; carries the time stamp of the failure."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class PositivityWarning(UserWarning):
    """Evolved state drifted measurably below positive semidefinite."""
