"""Distance metrics and an exact k-nearest-neighbour index.

Mahalanobis distance is realised by whitening the coordinates once and then
measuring Euclidean distance, so a single k-d tree serves both metrics.
Chebyshev queries run on the same tree with the L-infinity norm.

Neighbour lists are ordered by ``(distance, sample id)``. Distances used for
ordering are recomputed here rather than taken from the tree, so that
``dist(i, j)`` and ``dist(j, i)`` are bit-identical and exact ties are
resolved the same way from both ends of a pair.

For the rotation-invariant metrics the tree is built over coordinates rotated
onto their principal axes. Tree splits then follow the directions in which
the data actually varies, which keeps queries fast on data of low intrinsic
dimension. The tree only proposes candidates, so rounding in the rotated
copy cannot change any reported neighbour beyond the tie slack below.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular
from scipy.spatial import cKDTree

from drod.data_io import DataMatrix
from drod.errors import DegenerateInput, DimensionMismatch, KTooLarge, SingularCovariance

METRICS = ("euclidean", "mahalanobis", "chebyshev")
COVARIANCE_EPS = 1e-6
# relative slack when deciding whether a tie may straddle the k-th neighbour
_TIE_SLACK = 1e-9
_CHUNK = 4096


@dataclass(frozen=True)
class Metric:
    """A prepared distance metric.

    ``whitening`` is a lower-triangular ``W`` with ``W.T @ W`` equal to the
    regularized inverse covariance; it is only set for ``mahalanobis``.
    """

    kind: str = "euclidean"
    whitening: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.kind not in METRICS:
            raise ValueError(f"unknown metric {self.kind!r}; expected one of {METRICS}")
        if self.kind == "mahalanobis" and self.whitening is None:
            raise ValueError("mahalanobis metric needs a whitening transform; use prepare_metric")

    def transform(self, points: np.ndarray) -> np.ndarray:
        """Map points into the space where the metric is a plain norm."""
        points = np.asarray(points, dtype=np.float64)
        if self.whitening is None:
            return points
        return points @ self.whitening.T

    @property
    def p(self) -> float:
        return np.inf if self.kind == "chebyshev" else 2.0


def prepare_metric(data: DataMatrix | np.ndarray, kind: str = "euclidean") -> Metric:
    """Build a metric for ``data``.

    For Mahalanobis the covariance of the full dataset is regularized as
    ``C + eps * trace(C) / d * I`` and inverted through its Cholesky factor.
    """
    if kind not in METRICS:
        raise ValueError(f"unknown metric {kind!r}; expected one of {METRICS}")
    if kind != "mahalanobis":
        return Metric(kind)

    values = data.values if isinstance(data, DataMatrix) else np.atleast_2d(np.asarray(data, dtype=np.float64))
    n, d = values.shape
    if n < 2:
        raise DegenerateInput("mahalanobis metric needs at least 2 samples")
    cov = np.atleast_2d(np.cov(values, rowvar=False))
    ridge = COVARIANCE_EPS * np.trace(cov) / d
    if ridge <= 0:
        ridge = COVARIANCE_EPS
    reg = cov + ridge * np.eye(d)
    try:
        chol = np.linalg.cholesky(reg)
    except np.linalg.LinAlgError as exc:
        raise SingularCovariance(str(exc)) from exc
    whitening = solve_triangular(chol, np.eye(d), lower=True)
    return Metric("mahalanobis", whitening)


def _norm_rows(diff: np.ndarray, p: float) -> np.ndarray:
    if p == np.inf:
        return np.abs(diff).max(axis=-1)
    return np.sqrt(np.square(diff).sum(axis=-1))


def distance(a, b, m: Metric) -> float:
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    if a.shape != b.shape:
        raise DimensionMismatch(f"points have dimensions {a.shape[0]} and {b.shape[0]}")
    diff = a - b
    if m.whitening is not None:
        if m.whitening.shape[1] != diff.shape[0]:
            raise DimensionMismatch("metric was prepared for a different dimensionality")
        diff = m.whitening @ diff
    return float(_norm_rows(diff, m.p))


def paired_distances(A: np.ndarray, B: np.ndarray, m: Metric) -> np.ndarray:
    """Row-wise ``distance(A[i], B[i])``."""
    diff = np.asarray(A, dtype=np.float64) - np.asarray(B, dtype=np.float64)
    if m.whitening is not None:
        diff = diff @ m.whitening.T
    return _norm_rows(diff, m.p)


def extent(values: np.ndarray, m: Metric) -> float:
    """Bounding-box diagonal of ``values`` in metric space (an upper bound on the diameter)."""
    pts = m.transform(np.atleast_2d(values))
    return float(_norm_rows(pts.max(axis=0) - pts.min(axis=0), m.p))


class SpatialIndex:
    """Exact kNN over a fixed point set (rows of ``points``).

    Sample ids are row positions ``0..n-1``.
    """

    def __init__(self, points: np.ndarray, metric: Metric) -> None:
        self.metric = metric
        self.points = np.ascontiguousarray(metric.transform(points))
        self.n = self.points.shape[0]
        self._search = self._search_coordinates(self.points, metric)
        self._tree = cKDTree(self._search)
        # absolute slack covering rounding in the rotated copy (matters for duplicates)
        scale = float(np.abs(self._search).max()) if self.n else 0.0
        self._abs_slack = _TIE_SLACK * 1e-3 * scale + np.finfo(float).tiny

    @staticmethod
    def _search_coordinates(points: np.ndarray, metric: Metric) -> np.ndarray:
        if metric.p == np.inf or points.shape[0] < 2 or points.shape[1] < 2:
            return points
        centered = points - points.mean(axis=0)
        _, _, vt = np.linalg.svd(centered, full_matrices=False)
        return np.ascontiguousarray(centered @ vt.T)

    def _dist_to(self, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        # rows: (r,), cols: (r, c) -> (r, c) distances between rows[i] and cols[i, j]
        diff = self.points[cols] - self.points[rows][:, None, :]
        return _norm_rows(diff, self.metric.p)

    def extent(self) -> float:
        """Bounding-box diagonal in metric space, an upper bound on the diameter."""
        span = self.points.max(axis=0) - self.points.min(axis=0)
        return float(_norm_rows(span, self.metric.p))

    def knn_table(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        """Neighbour ids and distances for every sample, shape ``(n, k)``.

        Self is excluded; rows are ordered by ascending distance with exact
        ties broken by ascending id.
        """
        n = self.n
        if not 1 <= k <= n - 1:
            raise KTooLarge(f"k must lie in [1, {n - 1}], got {k}")
        # self + k neighbours + one probe to detect ties straddling the boundary
        kq = min(k + 2, n)
        out_idx = np.empty((n, k), dtype=np.int64)
        out_dist = np.empty((n, k), dtype=np.float64)
        for start in range(0, n, _CHUNK):
            rows = np.arange(start, min(start + _CHUNK, n))
            _, cand = self._tree.query(self._search[rows], kq, p=self.metric.p)
            cand = np.asarray(cand, dtype=np.int64).reshape(len(rows), kq)
            dist = self._dist_to(rows, cand)
            is_self = cand == rows[:, None]
            dist[is_self] = np.inf
            sort_ids = np.where(is_self, n, cand)
            order = np.lexsort((sort_ids, dist), axis=-1)
            cand = np.take_along_axis(cand, order, axis=1)
            dist = np.take_along_axis(dist, order, axis=1)
            out_idx[rows] = cand[:, :k]
            out_dist[rows] = dist[:, :k]
            if kq <= k + 1:
                continue
            kth = dist[:, k - 1]
            probe = dist[:, k]
            suspect = np.nonzero(probe <= kth * (1.0 + _TIE_SLACK) + self._abs_slack)[0]
            for local in suspect:
                i = rows[local]
                ids, d = self._ball_candidates(i, kth[local])
                out_idx[i] = ids[:k]
                out_dist[i] = d[:k]
        return out_idx, out_dist

    def _ball_candidates(self, i: int, radius: float) -> tuple[np.ndarray, np.ndarray]:
        r = radius * (1.0 + 2 * _TIE_SLACK) + 2 * self._abs_slack
        ids = np.asarray(self._tree.query_ball_point(self._search[i], r, p=self.metric.p), dtype=np.int64)
        ids = ids[ids != i]
        d = _norm_rows(self.points[ids] - self.points[i], self.metric.p)
        order = np.lexsort((ids, d))
        return ids[order], d[order]

    def query_knn(self, sample_id: int, k: int) -> list[int]:
        """The ``k`` nearest other samples to ``sample_id``."""
        n = self.n
        if not 1 <= k <= n - 1:
            raise KTooLarge(f"k must lie in [1, {n - 1}], got {k}")
        if not 0 <= sample_id < n:
            raise IndexError(f"sample id {sample_id} out of range for n={n}")
        kq = min(k + 2, n)
        _, cand = self._tree.query(self._search[sample_id], kq, p=self.metric.p)
        cand = np.atleast_1d(np.asarray(cand, dtype=np.int64))
        cand = cand[cand != sample_id]
        d = _norm_rows(self.points[cand] - self.points[sample_id], self.metric.p)
        order = np.lexsort((cand, d))
        cand, d = cand[order], d[order]
        if cand.shape[0] > k and d[k] <= d[k - 1] * (1.0 + _TIE_SLACK) + self._abs_slack:
            cand, d = self._ball_candidates(sample_id, d[k - 1])
        return [int(c) for c in cand[:k]]


def build_index(data: DataMatrix | np.ndarray, m: Metric) -> SpatialIndex:
    values = data.values if isinstance(data, DataMatrix) else np.atleast_2d(np.asarray(data, dtype=np.float64))
    if values.shape[0] < 1:
        raise DegenerateInput("cannot index an empty point set")
    return SpatialIndex(values, m)
