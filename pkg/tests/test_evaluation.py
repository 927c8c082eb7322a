"""AUC, Precision-s, k-means and Davies-Bouldin."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.metrics import davies_bouldin_score

from drod.errors import KTooLarge, NoOutliers, SingleClass, STooLarge, TooFewClusters
from drod.evaluation import auc, dbi, kmeans, precision_at_s, remove_top_s_and_cluster


def pair_count_auc(scores, labels) -> float:
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    wins = sum(1.0 if p > q else 0.5 if p == q else 0.0 for p in pos for q in neg)
    return wins / (len(pos) * len(neg))


class TestAuc:
    def test_perfect(self):
        assert auc([3, 1, 2], [1, 0, 0]) == 1.0

    def test_inverted(self):
        assert auc([1, 2, 3], [1, 0, 0]) == 0.0

    def test_full_tie(self):
        assert auc([1, 1], [1, 0]) == 0.5

    def test_single_class(self):
        with pytest.raises(SingleClass):
            auc([1, 2], [0, 0])

    def test_random_n100_matches_pair_counting(self, rng):
        scores = rng.normal(size=100)
        labels = (rng.uniform(size=100) < 0.3).astype(int)
        assert abs(auc(scores, labels) - pair_count_auc(scores, labels)) <= 1e-12

    def test_monotone_transform_invariance(self, rng):
        scores = rng.normal(size=80)
        labels = rng.integers(0, 2, size=80)
        base = auc(scores, labels)
        assert auc(np.exp(scores), labels) == base
        assert auc(3.0 * scores + 7.0, labels) == base

    def test_complement(self, rng):
        scores = rng.permutation(60).astype(float)
        labels = rng.integers(0, 2, size=60)
        assert auc(scores, labels) + auc(-scores, labels) == pytest.approx(1.0, abs=1e-15)


@settings(max_examples=100, deadline=None)
@given(st.data())
def test_auc_equals_pair_counting_with_ties(data):
    n = data.draw(st.integers(2, 60))
    scores = data.draw(st.lists(st.integers(0, 5), min_size=n, max_size=n))
    labels = data.draw(st.lists(st.integers(0, 1), min_size=n, max_size=n))
    if len(set(labels)) < 2:
        labels[0], labels[-1] = 0, 1
    assert abs(auc(scores, labels) - pair_count_auc(scores, labels)) <= 1e-12


class TestPrecision:
    def test_example(self):
        assert precision_at_s([5, 4, 3, 2], [1, 0, 1, 0], 2) == 0.5

    def test_default_s_perfect(self):
        assert precision_at_s([0.9, 0.1, 0.8, 0.2], [1, 0, 1, 0]) == 1.0

    def test_tie_break_by_id(self):
        assert precision_at_s([1.0, 1.0], [1, 0], 1) == 1.0
        assert precision_at_s([1.0, 1.0], [0, 1], 1) == 0.0

    def test_errors(self):
        with pytest.raises(STooLarge):
            precision_at_s([1, 2], [0, 1], 3)
        with pytest.raises(NoOutliers):
            precision_at_s([1, 2], [0, 0])


class TestKMeans:
    def test_pairs(self):
        res = kmeans(np.array([[0.0], [1.0], [10.0], [11.0]]), 2, seed=0)
        groups = {frozenset(np.nonzero(res.labels == c)[0].tolist()) for c in range(2)}
        assert groups == {frozenset({0, 1}), frozenset({2, 3})}
        assert sorted(res.centers.ravel().tolist()) == [0.5, 10.5]

    def test_k_equals_n(self, rng):
        pts = rng.normal(size=(6, 2))
        res = kmeans(pts, 6, seed=1)
        assert len(set(res.labels.tolist())) == 6
        assert res.inertia == 0.0

    def test_k_one(self, rng):
        pts = rng.normal(size=(30, 3))
        np.testing.assert_allclose(kmeans(pts, 1).centers[0], pts.mean(axis=0), rtol=1e-12)

    def test_too_many_clusters(self):
        with pytest.raises(KTooLarge):
            kmeans(np.zeros((3, 1)), 4)

    def test_inertia_non_increasing(self, rng):
        pts = rng.normal(size=(300, 2)) + rng.integers(0, 4, size=(300, 1)) * 5.0
        hist = kmeans(pts, 4, seed=3).inertia_history
        assert all(a >= b - 1e-9 for a, b in zip(hist, hist[1:]))

    def test_deterministic(self, rng):
        pts = rng.normal(size=(100, 2))
        np.testing.assert_array_equal(kmeans(pts, 3, seed=5).labels, kmeans(pts, 3, seed=5).labels)


class TestDbi:
    def test_zero_dispersion(self):
        assert dbi(np.array([[0.0, 0.0], [10.0, 0.0]]), [0, 1]) == 0.0

    def test_overlapping_clusters_are_large(self):
        pts = np.array([[0.0, 0.0], [2.0, 0.0], [0.0, 0.0], [2.0, 0.0]])
        assert dbi(pts, [0, 0, 1, 1]) > 1e6

    def test_tight_blobs(self, rng):
        pts = np.vstack([rng.normal((0, 0), 0.1, size=(200, 2)), rng.normal((10, 0), 0.1, size=(200, 2))])
        labels = np.repeat([0, 1], 200)
        spread = 0.1 * np.sqrt(np.pi / 2)
        assert dbi(pts, labels) == pytest.approx(2 * spread / 10, rel=0.5)

    def test_matches_sklearn(self, rng):
        pts = rng.normal(size=(150, 3))
        labels = rng.integers(0, 4, size=150)
        assert dbi(pts, labels) == pytest.approx(davies_bouldin_score(pts, labels), rel=1e-10)

    def test_one_cluster(self):
        with pytest.raises(TooFewClusters):
            dbi(np.zeros((3, 1)), [0, 0, 0])


class TestRemoval:
    @pytest.fixture
    def dirty(self, rng):
        blobs = np.vstack([rng.normal((0, 0), 1.0, size=(100, 2)), rng.normal((10, 0), 1.0, size=(100, 2))])
        scatter = rng.uniform(-40, 40, size=(10, 2))
        return np.vstack([blobs, scatter]), np.r_[np.zeros(200), np.ones(10)]

    def test_no_removal(self, dirty):
        pts, _ = dirty
        rep = remove_top_s_and_cluster(pts, np.zeros(len(pts)), 0, 2, seed=0)
        assert rep.dbi_before == rep.dbi_after

    def test_perfect_scores_decrease_dbi(self, dirty):
        pts, labels = dirty
        rep = remove_top_s_and_cluster(pts, labels, 10, 2, seed=0)
        assert rep.dbi_after < rep.dbi_before

    def test_s_too_large(self, dirty):
        pts, _ = dirty
        with pytest.raises(STooLarge):
            remove_top_s_and_cluster(pts, np.zeros(len(pts)), len(pts), 2)

    def test_report_json_fields(self, dirty):
        pts, labels = dirty
        rep = remove_top_s_and_cluster(pts, labels, 10, 2)
        assert set(rep.to_dict()) == {"s", "dbi_before", "dbi_after"}
