"""Local and subset-level anomaly indices and their combination.

* LAI: gap between a sample's density and the density peak of its subset.
* Link strength between two subsets: number of cross-subset natural-neighbour
  pairs divided by the distance between the subset centres.
* SAI: one minus the min-max normalised total link strength of a subset.
* DAI: ``SAI + SAI * LAI``, computed in the factored form ``SAI * (1 + LAI)``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from drod.data_io import DataMatrix
from drod.geometry import Metric, extent, paired_distances, prepare_metric
from drod.natural_neighbors import NeighborGraph
from drod.subsets import SubsetPartition, coincidence_guard


@dataclass(frozen=True, eq=False)
class SubsetScores:
    centers: np.ndarray
    ls_total: np.ndarray
    sai: np.ndarray


@dataclass(frozen=True, eq=False)
class SampleScores:
    lai: np.ndarray
    dai: np.ndarray


def minmax(values: np.ndarray) -> np.ndarray:
    """Scale to [0, 1]; a constant vector maps to all zeros."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        return values.copy()
    lo, hi = values.min(), values.max()
    if hi == lo:
        return np.zeros_like(values)
    return (values - lo) / (hi - lo)


def compute_lai(partition: SubsetPartition, rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho, dtype=np.float64)
    return partition.peak_density[partition.assignment] - rho


def subset_centers(partition: SubsetPartition, data: DataMatrix | np.ndarray) -> np.ndarray:
    values = data.values if isinstance(data, DataMatrix) else np.atleast_2d(np.asarray(data, dtype=np.float64))
    m = partition.m
    sums = np.zeros((m, values.shape[1]), dtype=np.float64)
    np.add.at(sums, partition.assignment, values)
    return sums / partition.sizes[:, None]


def neighbor_pair_counts(partition: SubsetPartition, graph: NeighborGraph) -> tuple[np.ndarray, np.ndarray]:
    """Subset pairs ``(a, b)`` with ``a < b`` joined by natural-neighbour edges, and their counts."""
    if graph.edges.shape[0] == 0:
        return np.empty((0, 2), dtype=np.int64), np.empty(0, dtype=np.int64)
    a = partition.assignment[graph.edges[:, 0]]
    b = partition.assignment[graph.edges[:, 1]]
    cross = a != b
    lo = np.minimum(a[cross], b[cross])
    hi = np.maximum(a[cross], b[cross])
    pairs, counts = np.unique(np.stack([lo, hi], axis=1), axis=0, return_counts=True)
    return pairs.reshape(-1, 2), counts


def link_strength(nbp: int | np.ndarray, center_distance: float | np.ndarray, guard: float) -> float | np.ndarray:
    """``nbp / dist`` with coincident centres clamped to ``guard``; zero when no pairs link."""
    nbp = np.asarray(nbp, dtype=np.float64)
    out = np.where(nbp > 0, nbp / np.maximum(np.asarray(center_distance, dtype=np.float64), guard), 0.0)
    return float(out) if out.ndim == 0 else out


def compute_sai(
    partition: SubsetPartition,
    graph: NeighborGraph,
    data: DataMatrix | np.ndarray,
    m: Metric | None = None,
    guard: float | None = None,
) -> SubsetScores:
    values = data.values if isinstance(data, DataMatrix) else np.atleast_2d(np.asarray(data, dtype=np.float64))
    m = m if m is not None else prepare_metric(values)
    if guard is None:
        guard = coincidence_guard(extent(values, m))
    centers = subset_centers(partition, values)
    pairs, nbp = neighbor_pair_counts(partition, graph)
    ls_total = np.zeros(partition.m, dtype=np.float64)
    if pairs.shape[0]:
        d = paired_distances(centers[pairs[:, 0]], centers[pairs[:, 1]], m)
        ls = link_strength(nbp, d, guard)
        ls_total += np.bincount(pairs[:, 0], weights=ls, minlength=partition.m)
        ls_total += np.bincount(pairs[:, 1], weights=ls, minlength=partition.m)
    sai = 1.0 - minmax(ls_total)
    if np.all(ls_total == ls_total[0]):
        # no discriminative global evidence
        sai = np.zeros(partition.m, dtype=np.float64)
    return SubsetScores(centers=centers, ls_total=ls_total, sai=sai)


def compute_dai(lai: np.ndarray, subset_scores: SubsetScores, partition: SubsetPartition) -> np.ndarray:
    sai = subset_scores.sai[partition.assignment]
    return sai * (1.0 + np.asarray(lai, dtype=np.float64))


def write_subset_table(path: str | Path, partition: SubsetPartition, scores: SubsetScores) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("subset_id", "size", "ls_total", "sai"))
        for s in range(partition.m):
            writer.writerow((s, len(partition.subsets[s]), repr(float(scores.ls_total[s])), repr(float(scores.sai[s]))))
