"""Shared fixtures and brute-force helpers."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

DATA_DIR = Path(__file__).parent / "data"


def brute_knn(points: np.ndarray, k: int, p: float = 2.0) -> list[list[int]]:
    """Exhaustive kNN with ``(distance, id)`` ordering, self excluded."""
    n = points.shape[0]
    diff = points[:, None, :] - points[None, :, :]
    if p == np.inf:
        dist = np.abs(diff).max(axis=-1)
    else:
        dist = np.sqrt((diff**2).sum(axis=-1))
    out = []
    for i in range(n):
        order = sorted((float(dist[i, j]), j) for j in range(n) if j != i)
        out.append([j for _, j in order[:k]])
    return out


def brute_mutual_knn(points: np.ndarray, k: int, p: float = 2.0) -> set[tuple[int, int]]:
    knn = [set(row) for row in brute_knn(points, k, p)]
    return {(i, j) for i in range(len(knn)) for j in knn[i] if i < j and i in knn[j]}


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture
def line3() -> np.ndarray:
    """The 1-D running example {0, 1, 10}."""
    return np.array([[0.0], [1.0], [10.0]])


@pytest.fixture
def two_blobs(rng) -> np.ndarray:
    a = rng.normal((0.0, 0.0), 1.0, size=(60, 2))
    b = rng.normal((10.0, 0.0), 1.0, size=(60, 2))
    return np.vstack([a, b])


@pytest.fixture
def ionosphere_path() -> Path:
    return DATA_DIR / "ionosphere.csv"


def pytest_terminal_summary(terminalreporter):
    """Print one line per acceptance criterion after the run."""
    import sys

    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for line in results:
            terminalreporter.write_line(line)
