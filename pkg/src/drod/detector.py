"""Sampling-enhanced detection: repeated subsample rounds with score accumulation."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from drod.data_io import DataMatrix, standardize
from drod.errors import AllRoundsDegenerate, DegenerateInput, DegenerateRound
from drod.geometry import METRICS, Metric, build_index, extent, prepare_metric
from drod.natural_neighbors import NeighborGraph, search_natural_neighbors, write_edge_list
from drod.scoring import SubsetScores, compute_dai, compute_lai, compute_sai, minmax, write_subset_table
from drod.subsets import SubsetPartition, coincidence_guard, default_upper_limit, explore_subsets, local_density, write_assignment

logger = logging.getLogger(__name__)

VARIANTS = ("full", "lai_only", "sai_only", "single_round")
AGGREGATES = ("sum", "mean_by_inclusion")


@dataclass(frozen=True)
class DetectorConfig:
    """Detector settings. Defaults reproduce the reference experimental setup."""

    eta: float = 0.8
    rounds: int = 60
    upper_limit: int | None = None
    metric_kind: str = "euclidean"
    variant: str = "full"
    seed: int = 42
    standardize: bool = False
    normalize_lai: bool = False
    aggregate: str = "sum"
    n_jobs: int = 1

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        if self.aggregate not in AGGREGATES:
            raise ValueError(f"unknown aggregate {self.aggregate!r}; expected one of {AGGREGATES}")
        if self.metric_kind not in METRICS:
            raise ValueError(f"unknown metric {self.metric_kind!r}; expected one of {METRICS}")
        if self.variant == "single_round":
            object.__setattr__(self, "eta", 1.0)
            object.__setattr__(self, "rounds", 1)
        if not 0.0 < self.eta <= 1.0:
            raise ValueError(f"eta must lie in (0, 1], got {self.eta}")
        if self.rounds < 1:
            raise ValueError(f"rounds must be >= 1, got {self.rounds}")
        if self.upper_limit is not None and self.upper_limit < 1:
            raise ValueError(f"upper_limit must be >= 1, got {self.upper_limit}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.n_jobs < 1:
            raise ValueError("n_jobs must be >= 1")


@dataclass(frozen=True, eq=False)
class ScoreVector:
    """Accumulated anomaly scores; ``inclusions[i]`` counts rounds that sampled ``i``."""

    scores: np.ndarray
    inclusions: np.ndarray
    lambdas: list[int] = field(default_factory=list)
    subset_counts: list[int] = field(default_factory=list)
    skipped_rounds: int = 0

    def __len__(self) -> int:
        return self.scores.shape[0]


@dataclass(frozen=True, eq=False)
class RoundResult:
    """Everything computed in one round, indexed by position in the round sample."""

    rows: np.ndarray
    scores: np.ndarray
    graph: NeighborGraph
    rho: np.ndarray
    partition: SubsetPartition
    subset_scores: SubsetScores
    lai: np.ndarray
    dai: np.ndarray


def round_seed(master: int, t: int) -> np.random.SeedSequence:
    """Independent seed for round ``t`` derived from the master seed."""
    return np.random.SeedSequence(entropy=[int(master), int(t)])


def sample_size(n: int, eta: float) -> int:
    # guard against 0.7 * 10 = 7.000000000000001 rounding up to 8
    return min(n, max(1, math.ceil(eta * n - 1e-9)))


def sample_round(n: int, eta: float, seed: int | np.random.SeedSequence) -> np.ndarray:
    """Sorted ids of a uniform ``ceil(eta * n)``-subset drawn without replacement."""
    if not 0.0 < eta <= 1.0:
        raise ValueError(f"eta must lie in (0, 1], got {eta}")
    size = sample_size(n, eta)
    if size == n:
        return np.arange(n)
    rng = np.random.default_rng(seed)
    return np.sort(rng.choice(n, size=size, replace=False))


def run_round(
    values: np.ndarray,
    config: DetectorConfig,
    metric: Metric | None = None,
    rows: np.ndarray | None = None,
) -> RoundResult:
    """Score the sampled rows ``values[rows]`` (all rows when ``rows`` is None).

    The metric should be prepared over the full dataset; for Mahalanobis this
    fixes the covariance independently of the round sample.
    """
    values = np.asarray(values, dtype=np.float64)
    rows = np.arange(values.shape[0]) if rows is None else np.asarray(rows)
    sub = values[rows]
    if sub.shape[0] < 2:
        raise DegenerateRound(f"round sample has {sub.shape[0]} rows; need at least 2")
    metric = metric if metric is not None else prepare_metric(values, config.metric_kind)

    index = build_index(sub, metric)
    guard = coincidence_guard(extent(sub, metric))
    graph = search_natural_neighbors(sub, metric, index=index)
    rho = local_density(graph, sub, metric, guard=guard)
    upper = config.upper_limit if config.upper_limit is not None else default_upper_limit(sub.shape[0])
    partition = explore_subsets(graph, rho, upper)
    lai = compute_lai(partition, rho)
    if config.normalize_lai:
        lai = minmax(lai)
    subset_scores = compute_sai(partition, graph, sub, metric, guard=guard)
    dai = compute_dai(lai, subset_scores, partition)

    if config.variant == "lai_only":
        scores = lai
    elif config.variant == "sai_only":
        scores = subset_scores.sai[partition.assignment]
    else:
        scores = dai
    return RoundResult(rows, scores, graph, rho, partition, subset_scores, lai, dai)


def detect(data: DataMatrix | np.ndarray, config: DetectorConfig | None = None) -> ScoreVector:
    """Accumulate per-round scores over ``config.rounds`` subsamples.

    Round ``t`` (1-based) samples with a seed derived from ``(config.seed, t)``
    so results do not depend on ``n_jobs``.
    """
    config = config if config is not None else DetectorConfig()
    if not isinstance(data, DataMatrix):
        data = DataMatrix(np.asarray(data, dtype=np.float64))
    if data.n < 2:
        raise DegenerateInput(f"detection needs n >= 2, got {data.n}")
    if config.standardize:
        data = standardize(data, "zscore")
    values = data.values
    n = data.n
    metric = prepare_metric(values, config.metric_kind)

    def one(t: int) -> RoundResult | None:
        rows = sample_round(n, config.eta, round_seed(config.seed, t))
        try:
            return run_round(values, config, metric, rows)
        except DegenerateRound as exc:
            logger.warning("round %d skipped: %s", t, exc)
            return None

    ts = range(1, config.rounds + 1)
    if config.n_jobs > 1:
        with ThreadPoolExecutor(max_workers=config.n_jobs) as pool:
            results = list(pool.map(one, ts))
    else:
        results = [one(t) for t in ts]

    scores = np.zeros(n, dtype=np.float64)
    inclusions = np.zeros(n, dtype=np.int64)
    lambdas: list[int] = []
    subset_counts: list[int] = []
    skipped = 0
    # merged in round order so floating-point sums are reproducible
    for res in results:
        if res is None:
            skipped += 1
            continue
        scores[res.rows] += res.scores
        inclusions[res.rows] += 1
        lambdas.append(res.graph.lambda_)
        subset_counts.append(res.partition.m)
    if skipped == config.rounds:
        raise AllRoundsDegenerate("every sampling round was degenerate")

    if config.aggregate == "mean_by_inclusion":
        scores = np.divide(scores, inclusions, out=np.zeros_like(scores), where=inclusions > 0)
    logger.info(
        "scored n=%d over %d rounds (lambda %s..%s, subsets %s..%s)",
        n,
        len(lambdas),
        min(lambdas),
        max(lambdas),
        min(subset_counts),
        max(subset_counts),
    )
    return ScoreVector(scores, inclusions, lambdas, subset_counts, skipped)


def dump_round(directory: str | Path, data: DataMatrix, config: DetectorConfig, t: int = 1) -> RoundResult:
    """Recompute round ``t`` and write its edge list, assignment and subset table."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    if config.standardize:
        data = standardize(data, "zscore")
    metric = prepare_metric(data.values, config.metric_kind)
    rows = sample_round(data.n, config.eta, round_seed(config.seed, t))
    res = run_round(data.values, config, metric, rows)
    ids = data.ids[rows]
    write_edge_list(directory / "edges.csv", res.graph, ids)
    write_assignment(directory / "subsets.csv", res.partition, ids)
    write_subset_table(directory / "subset_scores.csv", res.partition, res.subset_scores)
    return res
