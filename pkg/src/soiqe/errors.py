"""Exception types raised across the package."""


class SoiqeError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(SoiqeError, ValueError):
    """An argument violates a documented precondition."""


class FormatError(SoiqeError, ValueError):
    """A serialized file is malformed, truncated or of an unknown version."""


class NumericFailureError(SoiqeError, ArithmeticError):
    """An iterative solver produced a non-finite value.

    ``log`` holds the per-step objective history leading up to the failure.
    """

    def __init__(self, message, log=None):
        super().__init__(message)
        self.log = list(log or [])


class UndefinedCorrelationError(SoiqeError, ValueError):
    """A correlation was requested on an input with zero variance."""
