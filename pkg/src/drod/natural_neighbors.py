"""Natural-neighbour graph construction.

Two samples are natural neighbours when each lies in the other's ``r``-nearest
neighbourhood. The search radius ``r`` grows from 1 until every sample has a
natural neighbour or the number of samples without one stops changing; the
final ``r`` is the eigenvalue ``lambda``.

Because kNN lists are nested in ``r``, the pair ``(i, j)`` becomes linked at
exactly ``r = max(rank_i(j), rank_j(i))`` where ``rank_i(j)`` is the 1-based
position of ``j`` in ``i``'s sorted neighbour list. The whole expanding search
is therefore evaluated from one kNN table, widened by doubling only when the
fixpoint has not been reached inside the current width.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy import sparse

from drod.data_io import DataMatrix
from drod.errors import DegenerateInput
from drod.geometry import Metric, SpatialIndex, build_index, prepare_metric

logger = logging.getLogger(__name__)

_INITIAL_WIDTH = 16


@dataclass(frozen=True, eq=False)
class NeighborGraph:
    """Symmetric natural-neighbour adjacency.

    Attributes:
        n: Number of samples.
        edges: ``(m, 2)`` int array of linked pairs with ``i < j``, sorted.
        lambda_: Final search radius of the expanding search.
        counts: Number of samples without a natural neighbour after each
            radius ``r = 1..lambda_``.
    """

    n: int
    edges: np.ndarray
    lambda_: int
    counts: tuple[int, ...] = ()

    @cached_property
    def adjacency(self) -> sparse.csr_matrix:
        i, j = self.edges[:, 0], self.edges[:, 1]
        rows = np.concatenate([i, j])
        cols = np.concatenate([j, i])
        data = np.ones(rows.shape[0], dtype=bool)
        adj = sparse.csr_matrix((data, (rows, cols)), shape=(self.n, self.n))
        adj.sort_indices()
        return adj

    @property
    def nb_counts(self) -> np.ndarray:
        return np.diff(self.adjacency.indptr)

    @cached_property
    def nb_lists(self) -> list[np.ndarray]:
        adj = self.adjacency
        return [adj.indices[adj.indptr[i] : adj.indptr[i + 1]] for i in range(self.n)]

    def neighbors(self, i: int) -> np.ndarray:
        adj = self.adjacency
        return adj.indices[adj.indptr[i] : adj.indptr[i + 1]]

    def edge_set(self) -> set[tuple[int, int]]:
        return {(int(a), int(b)) for a, b in self.edges}


def _link_radius(nbr: np.ndarray) -> np.ndarray:
    """Radius at which each listed pair ``(i, nbr[i, a])`` becomes mutual.

    Returns an ``(n, K)`` array; pairs not mutual within width ``K`` get ``K + 1``.
    """
    n, width = nbr.shape
    rows = np.repeat(np.arange(n, dtype=np.int64), width)
    cols = nbr.reshape(-1)
    fwd_rank = np.tile(np.arange(1, width + 1, dtype=np.int64), n)

    keys = rows * n + cols
    order = np.argsort(keys, kind="stable")
    sorted_keys = keys[order]
    sorted_rank = fwd_rank[order]

    reverse = cols * n + rows
    pos = np.searchsorted(sorted_keys, reverse)
    pos_clipped = np.minimum(pos, sorted_keys.shape[0] - 1)
    found = sorted_keys[pos_clipped] == reverse
    rev_rank = np.where(found, sorted_rank[pos_clipped], width + 1)

    return np.maximum(fwd_rank, rev_rank).reshape(n, width)


def _fixpoint(first_link: np.ndarray, width: int, n: int) -> tuple[int | None, list[int]]:
    """Walk ``r = 1..width``; return the stopping radius (or None) and the counts."""
    # linked_by[r] = number of samples whose first natural neighbour appears at radius r
    linked_by = np.bincount(np.minimum(first_link, width + 1), minlength=width + 2)
    cumulative = np.cumsum(linked_by)
    counts: list[int] = []
    previous = None
    for r in range(1, width + 1):
        count = int(n - cumulative[r])
        counts.append(count)
        if count == 0 or count == previous:
            return r, counts
        previous = count
    return None, counts


def search_natural_neighbors(
    data: DataMatrix | np.ndarray,
    m: Metric | None = None,
    index: SpatialIndex | None = None,
) -> NeighborGraph:
    """Run the expanding mutual-kNN search and return the natural-neighbour graph."""
    values = data.values if isinstance(data, DataMatrix) else np.atleast_2d(np.asarray(data, dtype=np.float64))
    n = values.shape[0]
    if n < 2:
        raise DegenerateInput(f"natural-neighbour search needs n >= 2, got {n}")
    if index is None:
        index = build_index(values, m if m is not None else prepare_metric(values))

    width = min(n - 1, _INITIAL_WIDTH)
    while True:
        nbr, _ = index.knn_table(width)
        link = _link_radius(nbr)
        first_link = link.min(axis=1)
        lam, counts = _fixpoint(first_link, width, n)
        if lam is not None:
            break
        if width == n - 1:
            # unreachable: at r = n - 1 every pair is mutual; kept as a termination guard
            lam = n - 1
            break
        width = min(n - 1, 2 * width)
        logger.debug("natural-neighbour search widened to %d", width)

    mask = (link <= lam) & (nbr > np.arange(n)[:, None])
    i_idx, a_idx = np.nonzero(mask)
    edges = np.stack([i_idx, nbr[i_idx, a_idx]], axis=1).astype(np.int64)
    if edges.size:
        edges = edges[np.lexsort((edges[:, 1], edges[:, 0]))]
    else:
        edges = edges.reshape(0, 2)
    return NeighborGraph(n=n, edges=edges, lambda_=int(lam), counts=tuple(counts))


def mutual_knn_edges(index: SpatialIndex, k: int) -> set[tuple[int, int]]:
    """Edges of the mutual-kNN graph at a fixed ``k`` (``i < j``)."""
    nbr, _ = index.knn_table(k)
    sets = [set(row.tolist()) for row in nbr]
    return {(i, j) for i in range(index.n) for j in sets[i] if i < j and i in sets[j]}


def write_edge_list(path: str | Path, graph: NeighborGraph, ids: np.ndarray | None = None) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("i", "j"))
        for a, b in graph.edges:
            if ids is not None:
                a, b = sorted((ids[a], ids[b]))
            writer.writerow((a, b))
