"""Exception types raised by the solvers, estimators and simulator."""


class MinimaxBoundaryError(Exception):
    """Base class for all package errors."""


class BracketError(MinimaxBoundaryError, ValueError):
    """Scalar objective is not unimodal with an interior minimum on the bracket."""


class DomainError(MinimaxBoundaryError, ValueError):
    """An argument lies outside the domain where the construction is defined."""


class CoverageError(MinimaxBoundaryError, ValueError):
    """Observation grid does not cover the kernel support, or is not uniform."""


class ConfigurationError(MinimaxBoundaryError, ValueError):
    """Incompatible combination of kernel, scenario and path settings."""


class ConvergenceError(MinimaxBoundaryError, RuntimeError):
    """Iterative solver stopped before meeting its tolerance.

    The last iterate is attached as ``result`` so callers can inspect it.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result
