"""Exception and warning types shared across the package."""


class SfsError(Exception):
    """Base class for all package errors."""


class DomainError(SfsError, ValueError):
    """An argument lies outside the mathematical domain of a function."""


class PreconditionError(SfsError, ValueError):
    """A numerical precondition (grid span, resolution, padding...) is violated."""


class NonUniformGridError(PreconditionError):
    pass


class BandwidthError(PreconditionError):
    """The pulse spectrum does not fit inside a transfer-function grid."""


class ConvergenceError(SfsError, RuntimeError):
    """A least-squares fit failed to converge.

    The best iterate and its residual are kept so callers can inspect them.
    """

    def __init__(self, message, best=None, residual=None):
        super().__init__(message)
        self.best = best
        self.residual = residual


class ConfigError(SfsError, ValueError):
    """Invalid run configuration; ``key`` names the offending entry."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class RegimeWarning(UserWarning):
    """An approximation is being used outside the regime it was derived for."""
