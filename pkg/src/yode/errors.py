"""Exception hierarchy.

Every error raised on purpose by the package derives from :class:`YodeError`.
Input problems also derive from :class:`ValueError` and numerical breakdowns
from :class:`ArithmeticError`, so callers that only know the builtins still
catch them.
"""


class YodeError(Exception):
    """Base class for all package errors."""


class DomainError(YodeError, ValueError):
    """A parameter lies outside its admissible range (exponents, theta, ...)."""


class DivergenceError(DomainError):
    """Exponent sum at or below 1: the sewing constant does not exist."""


class ExponentError(DomainError):
    """Hölder exponents too small for the Young theory to apply."""


class IntervalError(YodeError, ValueError):
    """Index interval empty, reversed or out of bounds."""


class PartitionError(YodeError, ValueError):
    """Grid cannot be cut into the requested windows."""


class GridMismatchError(YodeError, ValueError):
    """Two paths that must share a grid do not."""


class DimensionError(YodeError, ValueError):
    """Vector or matrix dimensions are incompatible."""


class SizeError(YodeError, ValueError):
    """Problem too large for the chosen exact method."""


class SpecError(YodeError, ValueError):
    """Malformed textual specification (driver string, functional name, spec file)."""

    def __init__(self, message, token=None):
        super().__init__(message)
        self.token = token


class PathFormatError(YodeError, ValueError):
    """A path file violates the CSV path format."""


class MissingConstantsError(YodeError, LookupError):
    """A certificate needs Hölder constants for a field that has none."""


class InsufficientDataError(YodeError, ValueError):
    """Not enough refinement levels or samples for the requested fit."""


class NumericalError(YodeError, ArithmeticError):
    """Non-finite values or a numerical procedure that broke down."""


class PlanError(NumericalError):
    """Window bookkeeping could not be completed (e.g. no admissible radius)."""


class ConvergenceError(NumericalError):
    """Picard iteration failed to settle inside a window."""

    def __init__(self, message, window_index, last_delta):
        super().__init__(message)
        self.window_index = window_index
        self.last_delta = last_delta
