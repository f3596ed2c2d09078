"""Exception types shared across the library.

Every error raised on purpose by lsvkit derives from LsvError, so callers
can catch the whole family with one clause while still distinguishing the
specific failure modes below.
"""


class LsvError(Exception):
    """Base class for all lsvkit errors."""


class NonSquare(LsvError):
    """A square matrix was required but a rectangular one was supplied."""


class SingularMatrix(LsvError):
    """The matrix failed the pivot-based invertibility test."""


class DimensionMismatch(LsvError):
    """Operand dimensions are incompatible."""


class NumericallyDependent(LsvError):
    """Orthonormalization hit a residual too small to trust.

    ``index`` is the position (0-based) of the offending input vector.
    """

    def __init__(self, index: int, message: str | None = None):
        self.index = index
        super().__init__(message or f"vector {index} is numerically dependent on its predecessors")


class InvalidDimension(LsvError):
    """A dimension argument is outside the supported range."""


class DegenerateGeometry(LsvError):
    """A norm or distance underflowed the trust threshold (1e-12)."""


class InvalidQuery(LsvError):
    """A query object carries out-of-range parameters."""


class EnumerationTooLarge(LsvError):
    """Exact enumeration would exceed the configured state budget."""


class InsufficientData(LsvError):
    """Not enough distinct data points to fit the requested model."""
