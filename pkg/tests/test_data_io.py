"""CSV ingestion, standardization and score-file output."""

from __future__ import annotations

import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from drod.data_io import (
    SCORE_HEADER,
    DataMatrix,
    StandardizationSpec,
    fit_standardization,
    load_csv,
    read_scores,
    standardize,
    write_csv,
    write_scores,
)
from drod.errors import EmptyDataset, MissingFile, NonBinaryLabel, ParseError


def _write(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


class TestLoadCsv:
    def test_unlabelled(self, tmp_path):
        data = load_csv(_write(tmp_path, "0,0\n1,0\n10,0\n"), label_column=None)
        assert (data.n, data.d) == (3, 2)
        assert data.labels is None
        np.testing.assert_array_equal(data.ids, [0, 1, 2])

    def test_label_last(self, tmp_path):
        data = load_csv(_write(tmp_path, "0,0,0\n9,9,1\n"), label_column="last")
        assert (data.n, data.d) == (2, 2)
        np.testing.assert_array_equal(data.labels, [0, 1])
        np.testing.assert_array_equal(data.values, [[0, 0], [9, 9]])

    def test_named_label_column(self, tmp_path):
        path = _write(tmp_path, "x,y,z\n1,1,2\n3,0,4\n")
        data = load_csv(path, label_column="y", has_header=True)
        np.testing.assert_array_equal(data.values, [[1, 2], [3, 4]])
        np.testing.assert_array_equal(data.labels, [1, 0])

    def test_none_string_means_no_labels(self, tmp_path):
        data = load_csv(_write(tmp_path, "1,2\n"), label_column="none")
        assert data.labels is None and data.d == 2

    def test_parse_error_reports_position(self, tmp_path):
        with pytest.raises(ParseError) as info:
            load_csv(_write(tmp_path, "1,2\n3,abc\n"))
        assert (info.value.row, info.value.col) == (2, 2)

    def test_non_finite_is_a_parse_error(self, tmp_path):
        with pytest.raises(ParseError):
            load_csv(_write(tmp_path, "1,nan\n"))

    def test_non_binary_label(self, tmp_path):
        with pytest.raises(NonBinaryLabel) as info:
            load_csv(_write(tmp_path, "1,0\n2,2\n"), label_column="last")
        assert info.value.row == 2

    def test_missing_file(self, tmp_path):
        with pytest.raises(MissingFile):
            load_csv(tmp_path / "absent.csv")

    def test_empty_file(self, tmp_path):
        with pytest.raises(EmptyDataset):
            load_csv(_write(tmp_path, ""))

    def test_bundled_ionosphere_shape(self, ionosphere_path):
        data = load_csv(ionosphere_path, label_column="last")
        assert (data.n, data.d) == (351, 33)
        assert int(data.labels.sum()) == 126


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 8), st.integers(1, 4)), elements=st.floats(-1e6, 1e6, allow_nan=False)))
def test_csv_round_trip_is_bit_identical(tmp_path_factory, values):
    path = tmp_path_factory.mktemp("rt") / "x.csv"
    write_csv(path, DataMatrix(values))
    back = load_csv(path)
    assert back.values.tobytes() == DataMatrix(values).values.tobytes()


class TestStandardize:
    def test_two_points(self):
        out = standardize(DataMatrix(np.array([[0.0], [2.0]])), "zscore")
        np.testing.assert_array_equal(out.values, [[-1.0], [1.0]])

    def test_none_is_identity(self):
        data = DataMatrix(np.array([[3.0, 1.0], [4.0, 1.5]]))
        assert standardize(data, "none") is data

    def test_constant_feature_maps_to_zero(self):
        out = standardize(DataMatrix(np.array([[5.0], [5.0]])), "zscore")
        np.testing.assert_array_equal(out.values, [[0.0], [0.0]])

    def test_moments(self, rng):
        data = DataMatrix(rng.normal(3.0, 7.0, size=(200, 4)))
        out = standardize(data, "zscore").values
        np.testing.assert_allclose(out.mean(axis=0), 0.0, atol=1e-12)
        np.testing.assert_allclose(out.std(axis=0), 1.0, atol=1e-12)

    def test_zscore_then_none_is_stable(self, rng):
        data = DataMatrix(rng.normal(size=(30, 3)))
        once = standardize(data, "zscore")
        assert standardize(once, StandardizationSpec("none")).values is once.values

    def test_fitted_spec_applies_to_other_data(self):
        train = DataMatrix(np.array([[0.0], [2.0]]))
        spec = fit_standardization(train)
        out = standardize(DataMatrix(np.array([[4.0]])), spec)
        np.testing.assert_array_equal(out.values, [[3.0]])

    def test_labels_are_kept(self):
        data = DataMatrix(np.array([[0.0], [2.0]]), labels=np.array([0, 1]))
        np.testing.assert_array_equal(standardize(data, "zscore").labels, [0, 1])


class TestWriteScores:
    def _rows(self, path):
        with path.open(newline="") as fh:
            return list(csv.reader(fh))

    def test_ranked_by_descending_score(self, tmp_path):
        path = tmp_path / "s.csv"
        write_scores(path, np.array([0.2, 0.9]))
        rows = self._rows(path)
        assert tuple(rows[0]) == SCORE_HEADER
        assert [(r[0], float(r[1]), r[2]) for r in rows[1:]] == [("1", 0.9, "1"), ("0", 0.2, "2")]

    def test_ties_by_ascending_id(self, tmp_path):
        path = tmp_path / "s.csv"
        write_scores(path, np.array([0.5, 0.5]))
        assert [r[0] for r in self._rows(path)[1:]] == ["0", "1"]

    def test_empty_is_header_only(self, tmp_path):
        path = tmp_path / "s.csv"
        write_scores(path, np.array([]))
        assert self._rows(path) == [list(SCORE_HEADER)]

    def test_read_back(self, tmp_path):
        path = tmp_path / "s.csv"
        scores = np.array([0.1, 3.5, -2.0, 3.5])
        write_scores(path, scores)
        ids, back, inclusions = read_scores(path)
        np.testing.assert_array_equal(ids, [0, 1, 2, 3])
        np.testing.assert_array_equal(back, scores)
        np.testing.assert_array_equal(inclusions, 0)
