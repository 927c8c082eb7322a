"""Inject scatterliers and clusterliers into a base dataset.

Scatterliers are drawn per dimension from
``Unif(mean - 1.5 * range, mean + 1.5 * range)`` where ``range`` is the larger
of the distances from the base mean to the base maximum and minimum.
Clusterliers are diagonal-Gaussian micro-clusters whose total size is capped
at 10% of the combined dataset unless forced.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from drod.data_io import DataMatrix
from drod.errors import CapExceeded, DimensionMismatch

CLUSTERLIER_CAP = 0.10

BASE = -1
SCATTERLIER = -2


@dataclass(frozen=True)
class ClusterlierSpec:
    size: int
    mean: tuple[float, ...]
    stddev: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.size < 1:
            raise ValueError(f"clusterlier size must be positive, got {self.size}")
        object.__setattr__(self, "mean", tuple(float(v) for v in np.atleast_1d(self.mean)))
        std = np.atleast_1d(np.asarray(self.stddev, dtype=np.float64))
        if std.shape[0] == 1 and len(self.mean) > 1:
            std = np.repeat(std, len(self.mean))
        if std.shape[0] != len(self.mean):
            raise DimensionMismatch("clusterlier mean and stddev differ in length")
        if np.any(std <= 0):
            raise ValueError("clusterlier stddev must be positive")
        object.__setattr__(self, "stddev", tuple(float(v) for v in std))

    @property
    def d(self) -> int:
        return len(self.mean)


@dataclass(frozen=True, eq=False)
class SynthDataset:
    """Combined data. ``provenance`` is -1 for base rows, -2 for scatterliers,
    and the spec index (0, 1, ...) for clusterlier rows."""

    values: np.ndarray
    labels: np.ndarray
    provenance: np.ndarray

    def as_matrix(self) -> DataMatrix:
        return DataMatrix(self.values, self.labels)


@dataclass
class InjectionPlan:
    """Parsed injection spec file."""

    scatterliers: int = 0
    clusterliers: list[ClusterlierSpec] = field(default_factory=list)
    seed: int = 0

    @classmethod
    def from_json(cls, path: str | Path) -> InjectionPlan:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        specs = [ClusterlierSpec(int(c["size"]), tuple(c["mean"]), tuple(np.atleast_1d(c["stddev"]))) for c in raw.get("clusterliers", [])]
        return cls(int(raw.get("scatterliers", 0)), specs, int(raw.get("seed", 0)))


def _values(base: DataMatrix | np.ndarray) -> np.ndarray:
    return base.values if isinstance(base, DataMatrix) else np.atleast_2d(np.asarray(base, dtype=np.float64))


def scatterlier_bounds(base: DataMatrix | np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    values = _values(base)
    if values.shape[0] < 1:
        raise ValueError("base dataset is empty")
    mean = values.mean(axis=0)
    spread = np.maximum(np.abs(values.max(axis=0) - mean), np.abs(mean - values.min(axis=0)))
    return mean - 1.5 * spread, mean + 1.5 * spread


def generate_scatterliers(base: DataMatrix | np.ndarray, count: int, seed=0) -> np.ndarray:
    if count < 0:
        raise ValueError(f"count must be >= 0, got {count}")
    low, high = scatterlier_bounds(base)
    rng = np.random.default_rng(seed)
    return rng.uniform(low, high, size=(count, low.shape[0]))


def check_cap(specs: list[ClusterlierSpec], total_n: int, force: bool = False) -> None:
    clustered = sum(s.size for s in specs)
    if not force and clustered > CLUSTERLIER_CAP * total_n:
        raise CapExceeded(
            f"{clustered} clusterliers exceed {CLUSTERLIER_CAP:.0%} of {total_n} samples; pass force to override"
        )


def generate_clusterliers(
    specs: list[ClusterlierSpec],
    total_n: int,
    seed=0,
    force: bool = False,
) -> tuple[np.ndarray, np.ndarray]:
    """Draw every spec's micro-cluster; returns ``(values, spec index per row)``."""
    check_cap(specs, total_n, force)
    if not specs:
        return np.empty((0, 0)), np.empty(0, dtype=np.int64)
    d = specs[0].d
    if any(s.d != d for s in specs):
        raise DimensionMismatch("clusterlier specs have different dimensionality")
    rng = np.random.default_rng(seed)
    blocks = [rng.normal(np.asarray(s.mean), np.asarray(s.stddev), size=(s.size, d)) for s in specs]
    owner = np.concatenate([np.full(s.size, k, dtype=np.int64) for k, s in enumerate(specs)])
    return np.vstack(blocks), owner


def assemble(
    base: DataMatrix | np.ndarray,
    scatterliers: np.ndarray | None = None,
    clusterliers: tuple[np.ndarray, np.ndarray] | None = None,
) -> SynthDataset:
    """Stack base rows, then scatterliers, then clusterliers in spec order."""
    values = _values(base)
    d = values.shape[1]
    parts = [values]
    prov = [np.full(values.shape[0], BASE, dtype=np.int64)]
    if scatterliers is not None and len(scatterliers):
        scatterliers = np.atleast_2d(scatterliers)
        if scatterliers.shape[1] != d:
            raise DimensionMismatch(f"scatterliers have d={scatterliers.shape[1]}, base has d={d}")
        parts.append(scatterliers)
        prov.append(np.full(scatterliers.shape[0], SCATTERLIER, dtype=np.int64))
    if clusterliers is not None and len(clusterliers[0]):
        cvals, owner = clusterliers
        if cvals.shape[1] != d:
            raise DimensionMismatch(f"clusterliers have d={cvals.shape[1]}, base has d={d}")
        parts.append(cvals)
        prov.append(np.asarray(owner, dtype=np.int64))
    provenance = np.concatenate(prov)
    return SynthDataset(np.vstack(parts), (provenance != BASE).astype(np.int64), provenance)


def inject(
    base: DataMatrix | np.ndarray,
    scatterliers: int = 0,
    clusterliers: list[ClusterlierSpec] | None = None,
    seed: int = 0,
    force: bool = False,
) -> SynthDataset:
    """Generate and assemble in one call; scatter and cluster draws use independent streams."""
    specs = list(clusterliers or [])
    values = _values(base)
    total = values.shape[0] + scatterliers + sum(s.size for s in specs)
    if specs and specs[0].d != values.shape[1]:
        raise DimensionMismatch(f"clusterlier specs have d={specs[0].d}, base has d={values.shape[1]}")
    scatter_seed, cluster_seed = np.random.SeedSequence(seed).spawn(2)
    scat = generate_scatterliers(values, scatterliers, scatter_seed)
    clus = generate_clusterliers(specs, total, cluster_seed, force=force)
    return assemble(values, scat, clus)
