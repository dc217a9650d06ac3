"""Exception hierarchy shared across the package.

InputError covers bad user-supplied data or configuration (CLI exit 2,
HTTP 400); NumericError covers failures of the numeric machinery itself
(CLI exit 3, HTTP 500).
"""


class CoupleStreamError(Exception):
    """Base class for all library errors."""


class InputError(CoupleStreamError):
    """Invalid input data, parameters, or configuration."""


class NumericError(CoupleStreamError):
    """Numeric failure (non-SPD matrix, solver breakdown, ...)."""


class ConvergenceError(NumericError):
    """Iterative solver hit its iteration budget before reaching tolerance."""

    def __init__(self, message: str, gap: float, iterations: int):
        super().__init__(message)
        self.gap = gap
        self.iterations = iterations
