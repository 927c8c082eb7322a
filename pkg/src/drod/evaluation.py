"""Ranking metrics for anomaly scores and a small k-means / Davies-Bouldin toolkit."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import rankdata

from drod.data_io import ranking_order
from drod.errors import KTooLarge, NoOutliers, SingleClass, STooLarge, TooFewClusters
from drod.subsets import coincidence_guard


@dataclass
class EvalReport:
    auc: float | None = None
    precision_s: float | None = None
    s: int | None = None
    dbi_before: float | None = None
    dbi_after: float | None = None
    notes: str = ""

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None and v != ""}


def _binary(labels) -> np.ndarray:
    labels = np.asarray(labels).astype(np.int64).reshape(-1)
    if not np.all((labels == 0) | (labels == 1)):
        raise ValueError("labels must be 0 or 1")
    return labels


def auc(scores, labels) -> float:
    """Mann-Whitney estimate of P(outlier outscores inlier), ties counted as 1/2."""
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    labels = _binary(labels)
    if scores.shape != labels.shape:
        raise ValueError("scores and labels differ in length")
    n_pos = int(labels.sum())
    n_neg = labels.shape[0] - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClass("AUC needs both outliers and inliers")
    ranks = rankdata(scores, method="average")
    u = ranks[labels == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def precision_at_s(scores, labels, s: int | None = None) -> float:
    """Fraction of true outliers among the ``s`` top-ranked samples.

    ``s`` defaults to the number of labelled outliers; ties in score are
    broken by ascending sample position.
    """
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    labels = _binary(labels)
    n_pos = int(labels.sum())
    if n_pos == 0:
        raise NoOutliers("precision@s needs at least one labelled outlier")
    s = n_pos if s is None else int(s)
    if s < 1:
        raise ValueError(f"s must be positive, got {s}")
    if s > scores.shape[0]:
        raise STooLarge(f"s={s} exceeds n={scores.shape[0]}")
    top = ranking_order(scores, np.arange(scores.shape[0]))[:s]
    return float(labels[top].sum() / s)


def _sq_dists(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    d = (X * X).sum(1)[:, None] - 2.0 * X @ C.T + (C * C).sum(1)[None, :]
    return np.maximum(d, 0.0)


def _kmeanspp(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]), dtype=np.float64)
    centers[0] = X[rng.integers(n)]
    closest = _sq_dists(X, centers[:1]).ravel()
    for c in range(1, k):
        total = closest.sum()
        if total <= 0:
            idx = rng.integers(n)
        else:
            idx = int(rng.choice(n, p=closest / total))
        centers[c] = X[idx]
        closest = np.minimum(closest, _sq_dists(X, centers[c : c + 1]).ravel())
    return centers


@dataclass(frozen=True, eq=False)
class KMeansResult:
    labels: np.ndarray
    centers: np.ndarray
    inertia: float
    n_iter: int
    inertia_history: tuple[float, ...]


def kmeans(data, k: int, seed: int = 0, max_iter: int = 300) -> KMeansResult:
    """Lloyd's algorithm from k-means++ seeding.

    Stops when assignments no longer change or after ``max_iter`` iterations.
    An emptied cluster is re-seeded with the point farthest from its current centre.
    """
    X = np.atleast_2d(np.asarray(getattr(data, "values", data), dtype=np.float64))
    n = X.shape[0]
    if not 1 <= k <= n:
        raise KTooLarge(f"k must lie in [1, {n}], got {k}")
    rng = np.random.default_rng(seed)
    centers = _kmeanspp(X, k, rng)
    labels = np.full(n, -1, dtype=np.int64)
    history: list[float] = []
    it = 0
    for it in range(1, max_iter + 1):
        d = _sq_dists(X, centers)
        new_labels = d.argmin(axis=1)
        nearest = d[np.arange(n), new_labels]
        history.append(float(nearest.sum()))
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for c in range(k):
            members = labels == c
            if members.any():
                centers[c] = X[members].mean(axis=0)
            else:
                far = int(np.argmax(((X - centers[labels]) ** 2).sum(axis=1)))
                labels[far] = c
                centers[c] = X[far]
    inertia = float(((X - centers[labels]) ** 2).sum())
    return KMeansResult(labels, centers, inertia, it, tuple(history))


def dbi(data, cluster_labels) -> float:
    """Davies-Bouldin index with Euclidean distances; lower is better."""
    X = np.atleast_2d(np.asarray(getattr(data, "values", data), dtype=np.float64))
    cluster_labels = np.asarray(cluster_labels).reshape(-1)
    uniq = np.unique(cluster_labels)
    if uniq.shape[0] < 2:
        raise TooFewClusters("DBI needs at least 2 non-empty clusters")
    centroids = np.stack([X[cluster_labels == c].mean(axis=0) for c in uniq])
    spread = np.array(
        [np.linalg.norm(X[cluster_labels == c] - centroids[i], axis=1).mean() for i, c in enumerate(uniq)]
    )
    span = X.max(axis=0) - X.min(axis=0)
    guard = coincidence_guard(float(np.linalg.norm(span)))
    sep = np.linalg.norm(centroids[:, None, :] - centroids[None, :, :], axis=-1)
    sep = np.maximum(sep, guard)
    ratio = (spread[:, None] + spread[None, :]) / sep
    np.fill_diagonal(ratio, -np.inf)
    return float(ratio.max(axis=1).mean())


def remove_top_s_and_cluster(data, scores, s: int, k: int, seed: int = 0) -> EvalReport:
    """DBI of k-means before and after dropping the ``s`` highest-scored samples."""
    X = np.atleast_2d(np.asarray(getattr(data, "values", data), dtype=np.float64))
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    n = X.shape[0]
    if not 0 <= s < n:
        raise STooLarge(f"s must lie in [0, {n - 1}], got {s}")
    before = dbi(X, kmeans(X, k, seed).labels)
    keep = np.ones(n, dtype=bool)
    keep[ranking_order(scores, np.arange(n))[:s]] = False
    kept = X[keep]
    after = dbi(kept, kmeans(kept, k, seed).labels)
    return EvalReport(s=s, dbi_before=before, dbi_after=after)
