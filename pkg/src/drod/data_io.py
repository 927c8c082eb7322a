"""Loading, validating and standardizing tabular data; writing score files."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from drod.errors import DimensionMismatch, EmptyDataset, MissingFile, NonBinaryLabel, ParseError

SCORE_HEADER = ("id", "score", "rank", "inclusions")


@dataclass(frozen=True)
class DataMatrix:
    """An ``n x d`` block of finite reals with optional binary outlier labels.

    Attributes:
        values: Feature matrix of shape (n, d), float64.
        labels: Optional length-n int array, 1 = outlier, 0 = normal.
        ids: Length-n sample identifiers, ``0..n-1`` unless given.
    """

    values: np.ndarray
    labels: np.ndarray | None = None
    ids: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim == 1:
            values = values.reshape(-1, 1)
        if values.ndim != 2:
            raise DimensionMismatch(f"expected a 2-D array, got shape {values.shape}")
        n, d = values.shape
        if n < 1 or d < 1:
            raise EmptyDataset(f"dataset must have n >= 1 and d >= 1, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("dataset contains NaN or infinite entries")
        object.__setattr__(self, "values", values)

        if self.labels is not None:
            labels = np.asarray(self.labels)
            if labels.shape != (n,):
                raise DimensionMismatch(f"labels length {labels.shape} does not match n={n}")
            if not np.all((labels == 0) | (labels == 1)):
                raise ValueError("labels must be 0 or 1")
            object.__setattr__(self, "labels", labels.astype(np.int64))

        ids = np.arange(n) if self.ids is None else np.asarray(self.ids)
        if ids.shape != (n,):
            raise DimensionMismatch(f"ids length {ids.shape} does not match n={n}")
        object.__setattr__(self, "ids", ids)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def take(self, rows: np.ndarray) -> DataMatrix:
        """Row subset, keeping labels and ids aligned."""
        rows = np.asarray(rows)
        labels = None if self.labels is None else self.labels[rows]
        return DataMatrix(self.values[rows], labels, self.ids[rows])


@dataclass(frozen=True)
class StandardizationSpec:
    """``mode`` is ``"none"`` or ``"zscore"``; statistics are filled by :func:`fit_standardization`."""

    mode: str = "none"
    mean: np.ndarray | None = None
    std: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.mode not in ("none", "zscore"):
            raise ValueError(f"unknown standardization mode {self.mode!r}")


def _parse_real(text: str, row: int, col: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ParseError(row, col, text) from None
    if not math.isfinite(value):
        raise ParseError(row, col, text)
    return value


def _parse_label(text: str, row: int) -> int:
    stripped = text.strip()
    try:
        value = float(stripped)
    except ValueError:
        raise NonBinaryLabel(row, text) from None
    if value not in (0.0, 1.0):
        raise NonBinaryLabel(row, text)
    return int(value)


def load_csv(
    path: str | Path,
    label_column: str | None = None,
    has_header: bool = False,
) -> DataMatrix:
    """Read a comma-separated numeric table.

    Args:
        path: CSV file (UTF-8, decimal-point reals).
        label_column: ``None`` for no labels, ``"last"`` for the final column,
            or a header name (requires ``has_header``).
        has_header: Whether the first row holds column names.

    Returns:
        DataMatrix with rows in file order and the label column removed.

    Raises:
        MissingFile, ParseError, NonBinaryLabel, EmptyDataset.
    """
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"no such file: {path}")

    with path.open(newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(cell.strip() for cell in r)]

    header: list[str] | None = None
    first_row = 1
    if has_header and rows:
        header = [h.strip() for h in rows[0]]
        rows = rows[1:]
        first_row = 2
    if not rows:
        raise EmptyDataset(f"{path} contains no data rows")

    width = len(rows[0])
    label_idx: int | None
    if label_column is None or label_column == "none":
        label_idx = None
    elif label_column == "last":
        label_idx = width - 1
    else:
        if header is None:
            raise ValueError("a named label column requires has_header=True")
        if label_column not in header:
            raise ValueError(f"label column {label_column!r} not in header {header}")
        label_idx = header.index(label_column)

    feature_cols = [c for c in range(width) if c != label_idx]
    if not feature_cols:
        raise EmptyDataset(f"{path} has no feature columns")

    values = np.empty((len(rows), len(feature_cols)), dtype=np.float64)
    labels = np.empty(len(rows), dtype=np.int64) if label_idx is not None else None
    for r, cells in enumerate(rows):
        line_no = r + first_row
        if len(cells) != width:
            raise ParseError(line_no, len(cells) + 1, ",".join(cells))
        for j, c in enumerate(feature_cols):
            values[r, j] = _parse_real(cells[c].strip(), line_no, c + 1)
        if labels is not None:
            labels[r] = _parse_label(cells[label_idx], line_no)

    return DataMatrix(values, labels)


def write_csv(path: str | Path, data: DataMatrix, header: Sequence[str] | None = None) -> None:
    """Write values (and labels as the last column, when present) at full precision."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if header is not None:
            writer.writerow(header)
        for i in range(data.n):
            row = [repr(float(v)) for v in data.values[i]]
            if data.labels is not None:
                row.append(str(int(data.labels[i])))
            writer.writerow(row)


def fit_standardization(data: DataMatrix, mode: str = "zscore") -> StandardizationSpec:
    if mode == "none":
        return StandardizationSpec("none")
    return StandardizationSpec(mode, data.values.mean(axis=0), data.values.std(axis=0))


def standardize(data: DataMatrix, spec: StandardizationSpec | str) -> DataMatrix:
    """Apply z-scoring per feature; zero-variance features become all zeros.

    A spec with ``mode="zscore"`` but no stored statistics is fitted on ``data``.
    """
    if isinstance(spec, str):
        spec = StandardizationSpec(spec)
    if spec.mode == "none":
        return data
    mean = data.values.mean(axis=0) if spec.mean is None else np.asarray(spec.mean)
    std = data.values.std(axis=0) if spec.std is None else np.asarray(spec.std)
    centered = data.values - mean
    safe = np.where(std > 0, std, 1.0)
    scaled = np.where(std > 0, centered / safe, 0.0)
    return replace(data, values=scaled)


def ranking_order(scores: np.ndarray, ids: np.ndarray) -> np.ndarray:
    """Indices sorted by descending score, ties broken by ascending id."""
    scores = np.asarray(scores, dtype=np.float64)
    return np.lexsort((np.asarray(ids), -scores))


def write_scores(path: str | Path, scores, ids: Sequence | np.ndarray | None = None) -> None:
    """Write ``id,score,rank,inclusions`` rows in rank order.

    ``scores`` is a ScoreVector (anything with ``.scores`` and ``.inclusions``)
    or a plain array, in which case inclusions are written as 0.
    """
    values = np.asarray(getattr(scores, "scores", scores), dtype=np.float64).reshape(-1)
    inclusions = getattr(scores, "inclusions", None)
    if inclusions is None:
        inclusions = np.zeros(values.shape[0], dtype=np.int64)
    ids = np.arange(values.shape[0]) if ids is None else np.asarray(ids)
    if ids.shape[0] != values.shape[0]:
        raise DimensionMismatch(f"{values.shape[0]} scores but {ids.shape[0]} ids")

    order = ranking_order(values, ids) if values.size else np.empty(0, dtype=np.int64)
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SCORE_HEADER)
        for rank, i in enumerate(order, start=1):
            writer.writerow([ids[i], repr(float(values[i])), rank, int(inclusions[i])])


def read_scores(path: str | Path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Read a score CSV back, returning ``(ids, scores, inclusions)`` sorted by id."""
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != SCORE_HEADER:
            raise ValueError(f"{path} does not have header {','.join(SCORE_HEADER)}")
        rows = [r for r in reader if r]
    ids = np.array([int(r[0]) for r in rows], dtype=np.int64)
    scores = np.array([_parse_real(r[1], k + 2, 2) for k, r in enumerate(rows)], dtype=np.float64)
    inclusions = np.array([int(r[3]) for r in rows], dtype=np.int64)
    order = np.argsort(ids, kind="stable")
    return ids[order], scores[order], inclusions[order]
