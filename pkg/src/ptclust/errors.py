"""Exception types shared across the package."""


class PtclustError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(PtclustError):
    """Input data or parameters violate a documented precondition."""


class NumericError(PtclustError):
    """A numerical invariant failed during computation."""
