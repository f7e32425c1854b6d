"""Exception hierarchy.

Two branches matter to callers: ``DataError`` for malformed or insufficient
input (CLI exit code 2) and ``NumericalError`` for failures of the numerics
themselves (CLI exit code 3).
"""


class PrimoError(Exception):
    """Base class for every error raised by this package."""


class DataError(PrimoError):
    """Invalid, inconsistent or insufficient input data."""


class NumericalError(PrimoError):
    """A numerical operation could not be carried out reliably."""


class ValidationError(DataError):
    """A configuration or domain value violates its invariants."""


class InvalidTrajectoryError(DataError):
    """A trajectory breaks its preconditions (length, time ordering, finiteness)."""


class DimensionError(DataError):
    """Mismatched array dimensions between related objects."""


class InsufficientDataError(DataError):
    """Too few samples for the requested estimate."""


class DegenerateDatasetError(DataError):
    """A dataset statistic degenerates (e.g. zero spread) and cannot normalize."""


class ParseError(DataError):
    """A file could not be parsed; the message names the offending line."""


class ModelFormatError(DataError):
    """A model or manifest file is malformed, truncated or invariant-violating."""


class UnsupportedOperationError(DataError):
    """The requested operation does not apply to this model kind."""


class DegenerateBasisError(NumericalError):
    """All basis activations underflowed to zero; the row cannot be normalized."""


class IllConditionedError(NumericalError):
    """A linear solve was refused because the system is numerically singular."""


class ConditioningError(NumericalError):
    """Gaussian conditioning failed because the innovation covariance is singular."""


class RankWarning(UserWarning):
    """More components requested than the covariance numerically supports."""
