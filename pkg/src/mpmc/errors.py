"""Exception hierarchy shared by all modules.

Every error carries an ``exit_code`` used by the command-line front end:
2 for user errors, 3 for resource/budget limits, 4 for numerical failures.
"""


class MpmcError(Exception):
    """Base class for all package errors."""

    exit_code = 2


# --- point sets and files ---

class DomainError(MpmcError):
    """A coordinate lies outside the closed unit cube."""


class FormatError(MpmcError):
    """A point file is malformed (ragged rows, non-numeric fields)."""


class InvalidProjection(MpmcError):
    """A projection index set is empty, unsorted, or out of range."""


class EmptyPointSet(MpmcError):
    """An operation requires at least one point."""


# --- generators ---

class InvalidBase(MpmcError):
    """Radical-inverse base below 2."""


class UnsupportedDimension(MpmcError):
    """Requested dimension exceeds the embedded prime/direction tables."""


class DimensionMismatch(MpmcError):
    """Two objects disagree on dimension."""


class InvalidShiftBound(MpmcError):
    """Random-shift bound outside (0, 1]."""


class InvalidConfig(MpmcError):
    """A configuration record fails validation."""


# --- discrepancy ---

class ComplexityBudgetExceeded(MpmcError):
    """An exact computation would exceed its enumeration budget."""

    exit_code = 3


# --- autodiff ---

class ShapeError(MpmcError):
    """Tensor shapes are incompatible for the requested primitive."""


class NotAScalar(MpmcError):
    """Backward pass requested on a non-scalar loss."""


class TapeConsumed(MpmcError):
    """Backward pass requested twice on the same tape."""


# --- model ---

class InvalidRadius(MpmcError):
    """Neighborhood radius outside [0, sqrt(d)]."""


# --- training ---

class TrainingDiverged(MpmcError):
    """Loss became non-finite or blew up; carries the last finite state."""

    exit_code = 4

    def __init__(self, message, last_result=None):
        super().__init__(message)
        self.last_result = last_result


class SearchFailed(MpmcError):
    """Every random-search trial diverged."""

    exit_code = 4


# --- finance ---

class NumericalError(MpmcError):
    """A numerical evaluation produced a non-finite result."""

    exit_code = 4
