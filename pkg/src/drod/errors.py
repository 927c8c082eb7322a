"""Exception types raised across the package."""

from __future__ import annotations


class DrodError(Exception):
    """Base class for all library errors."""


class MissingFile(DrodError, FileNotFoundError):
    pass


class ParseError(DrodError, ValueError):
    def __init__(self, row: int, col: int, value: str) -> None:
        super().__init__(f"cannot parse {value!r} as a real number at row {row}, column {col}")
        self.row = row
        self.col = col
        self.value = value


class NonBinaryLabel(DrodError, ValueError):
    def __init__(self, row: int, value: str) -> None:
        super().__init__(f"label {value!r} at row {row} is not 0 or 1")
        self.row = row
        self.value = value


class EmptyDataset(DrodError, ValueError):
    pass


class DimensionMismatch(DrodError, ValueError):
    pass


class SingularCovariance(DrodError, ValueError):
    pass


class KTooLarge(DrodError, ValueError):
    pass


class DegenerateInput(DrodError, ValueError):
    pass


class DegenerateRound(DrodError, ValueError):
    pass


class AllRoundsDegenerate(DrodError, RuntimeError):
    pass


class SingleClass(DrodError, ValueError):
    pass


class NoOutliers(DrodError, ValueError):
    pass


class STooLarge(DrodError, ValueError):
    pass


class TooFewClusters(DrodError, ValueError):
    pass


class CapExceeded(DrodError, ValueError):
    pass
