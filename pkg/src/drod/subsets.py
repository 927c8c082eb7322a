"""Natural-neighbour local density and reference-subset partitioning."""

from __future__ import annotations

import csv
import math
from collections import deque
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from drod.data_io import DataMatrix
from drod.geometry import Metric, extent, paired_distances, prepare_metric
from drod.natural_neighbors import NeighborGraph

# Denominators below DELTA_SCALE * extent are treated as coincident points.
DELTA_SCALE = 1e-12


def coincidence_guard(extent: float) -> float:
    """The small positive distance substituted for a zero denominator."""
    return DELTA_SCALE * (extent if extent > 0 else 1.0)


@dataclass(frozen=True, eq=False)
class SubsetPartition:
    """Disjoint cover of ``0..n-1`` by reference subsets.

    ``subsets[s]`` lists member ids in insertion order (seed first);
    ``assignment[i]`` is the subset holding sample ``i``.
    """

    subsets: list[np.ndarray]
    assignment: np.ndarray
    peak_density: np.ndarray
    upper_limit: int

    @property
    def m(self) -> int:
        return len(self.subsets)

    @property
    def sizes(self) -> np.ndarray:
        return np.array([len(s) for s in self.subsets], dtype=np.int64)


def _as_values(data: DataMatrix | np.ndarray) -> np.ndarray:
    return data.values if isinstance(data, DataMatrix) else np.atleast_2d(np.asarray(data, dtype=np.float64))


def local_density(
    graph: NeighborGraph,
    data: DataMatrix | np.ndarray,
    m: Metric | None = None,
    guard: float | None = None,
) -> np.ndarray:
    """``rho[i] = |NB(i)| / sum of distances to NB(i)``, 0 for samples with no neighbours.

    A zero distance sum (sample coincides with all its neighbours) is replaced
    by ``guard``, making exact duplicates density peaks.
    """
    values = _as_values(data)
    m = m if m is not None else prepare_metric(values)
    n = graph.n
    rho = np.zeros(n, dtype=np.float64)
    if graph.edges.shape[0] == 0:
        return rho
    if guard is None:
        guard = coincidence_guard(extent(values, m))

    i, j = graph.edges[:, 0], graph.edges[:, 1]
    d = paired_distances(values[i], values[j], m)
    dist_sum = np.bincount(i, weights=d, minlength=n) + np.bincount(j, weights=d, minlength=n)
    counts = graph.nb_counts.astype(np.float64)
    has_nb = counts > 0
    rho[has_nb] = counts[has_nb] / np.maximum(dist_sum[has_nb], guard)
    return rho


def default_upper_limit(n: int) -> int:
    """``ceil(sqrt(n))``."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return math.isqrt(n - 1) + 1 if n > 1 else 1


def explore_subsets(graph: NeighborGraph, rho: np.ndarray, upper_limit: int) -> SubsetPartition:
    """Greedy partition seeded at density peaks.

    Each subset starts at the densest unassigned sample (ties by ascending id)
    and grows by scanning its members in insertion order, absorbing each
    member's unassigned natural neighbours as one batch. It closes once its
    size reaches ``upper_limit`` after a batch, or when no member has
    unassigned neighbours left. Samples with zero density become singletons.
    """
    if upper_limit < 1:
        raise ValueError(f"upper limit must be >= 1, got {upper_limit}")
    rho = np.asarray(rho, dtype=np.float64)
    n = graph.n
    adj = graph.adjacency
    indptr, indices = adj.indptr, adj.indices

    assignment = np.full(n, -1, dtype=np.int64)
    subsets: list[np.ndarray] = []
    # seeds in descending density, ascending id on ties
    seed_order = np.lexsort((np.arange(n), -rho))
    seed_order = seed_order[rho[seed_order] > 0]

    for seed in seed_order:
        if assignment[seed] >= 0:
            continue
        label = len(subsets)
        assignment[seed] = label
        members = [int(seed)]
        queue = deque(members)
        while queue:
            j = queue.popleft()
            nb = indices[indptr[j] : indptr[j + 1]]
            fresh = nb[assignment[nb] < 0]
            if fresh.size:
                assignment[fresh] = label
                members.extend(int(x) for x in fresh)
                queue.extend(int(x) for x in fresh)
            if len(members) >= upper_limit:
                break
        subsets.append(np.array(members, dtype=np.int64))

    for i in np.nonzero(assignment < 0)[0]:
        assignment[i] = len(subsets)
        subsets.append(np.array([i], dtype=np.int64))

    peak = np.array([rho[s].max() for s in subsets], dtype=np.float64)
    return SubsetPartition(subsets=subsets, assignment=assignment, peak_density=peak, upper_limit=int(upper_limit))


def write_assignment(path: str | Path, partition: SubsetPartition, ids: np.ndarray | None = None) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("sample_id", "subset_id"))
        for i, s in enumerate(partition.assignment):
            writer.writerow((i if ids is None else ids[i], int(s)))
