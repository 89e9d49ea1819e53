"""Matrix Market and vector file round trips plus malformed-input diagnostics."""

import numpy as np
import pytest

from stokesqp import SparseOperator
from stokesqp.mmio import (MatrixMarketError, read_matrix, read_vector,
                           write_matrix, write_vector)


def test_general_matrix_round_trip(tmp_path):
    rng = np.random.default_rng(41)
    dense = np.round(rng.standard_normal((4, 6)), 3)
    dense[np.abs(dense) < 0.4] = 0.0
    path = tmp_path / "m.mtx"
    write_matrix(path, SparseOperator.from_dense(dense))
    back = read_matrix(path)
    assert not back.symmetric
    assert np.array_equal(back.toarray(), dense)


def test_symmetric_matrix_round_trip(tmp_path):
    rng = np.random.default_rng(42)
    g = np.round(rng.standard_normal((5, 5)), 3)
    dense = g + g.T
    path = tmp_path / "s.mtx"
    write_matrix(path, SparseOperator.from_dense(dense, symmetric=True))
    text = path.read_text()
    assert text.startswith("%%MatrixMarket matrix coordinate real symmetric\n")
    back = read_matrix(path)
    assert back.symmetric
    assert np.array_equal(back.toarray(), dense)


def test_symmetric_file_stores_lower_triangle_only(tmp_path):
    dense = np.array([[2.0, 1.0], [1.0, 3.0]])
    path = tmp_path / "s.mtx"
    write_matrix(path, SparseOperator.from_dense(dense, symmetric=True))
    body = path.read_text().splitlines()[2:]
    for line in body:
        i, j, _ = line.split()
        assert int(i) >= int(j)


def test_indices_are_one_based(tmp_path):
    path = tmp_path / "m.mtx"
    write_matrix(path, SparseOperator.from_dense([[0.0, 7.0], [0.0, 0.0]]))
    assert path.read_text().splitlines()[2] == "1 2 7.0"


def test_vector_round_trip(tmp_path):
    v = np.array([1.0, -2.5, 3.25e-17, 0.0])
    path = tmp_path / "v.txt"
    write_vector(path, v)
    assert np.array_equal(read_vector(path), v)


def test_full_precision_survives_round_trip(tmp_path):
    rng = np.random.default_rng(43)
    v = rng.standard_normal(50)
    path = tmp_path / "v.txt"
    write_vector(path, v)
    assert np.array_equal(read_vector(path), v)
    dense = rng.standard_normal((7, 7))
    mpath = tmp_path / "m.mtx"
    write_matrix(mpath, SparseOperator.from_dense(dense))
    assert np.array_equal(read_matrix(mpath).toarray(), dense)


def test_comments_and_blank_lines_skipped(tmp_path):
    path = tmp_path / "m.mtx"
    path.write_text("%%MatrixMarket matrix coordinate real general\n"
                    "% a comment\n"
                    "\n"
                    "2 2 1\n"
                    "% another\n"
                    "2 1 4.5\n")
    back = read_matrix(path)
    assert np.array_equal(back.toarray(), [[0.0, 0.0], [4.5, 0.0]])


def _expect_error(path, fragment, lineno=None):
    with pytest.raises(MatrixMarketError) as excinfo:
        read_matrix(path)
    assert fragment in str(excinfo.value)
    if lineno is not None:
        assert excinfo.value.lineno == lineno
        assert f":{lineno}:" in str(excinfo.value)


def test_bad_header_diagnosed(tmp_path):
    path = tmp_path / "m.mtx"
    path.write_text("%%MatrixMarket matrix array real general\n2 2\n")
    _expect_error(path, "unsupported header", lineno=1)


def test_bad_symmetry_diagnosed(tmp_path):
    path = tmp_path / "m.mtx"
    path.write_text("%%MatrixMarket matrix coordinate real hermitian\n1 1 0\n")
    _expect_error(path, "unsupported symmetry", lineno=1)


def test_unparsable_entry_names_line(tmp_path):
    path = tmp_path / "m.mtx"
    path.write_text("%%MatrixMarket matrix coordinate real general\n"
                    "2 2 2\n"
                    "1 1 1.0\n"
                    "2 two 2.0\n")
    _expect_error(path, "cannot parse entry", lineno=4)


def test_out_of_range_index_names_line(tmp_path):
    path = tmp_path / "m.mtx"
    path.write_text("%%MatrixMarket matrix coordinate real general\n"
                    "2 2 1\n"
                    "3 1 1.0\n")
    _expect_error(path, "outside", lineno=3)


def test_entry_count_mismatch_diagnosed(tmp_path):
    path = tmp_path / "m.mtx"
    path.write_text("%%MatrixMarket matrix coordinate real general\n"
                    "2 2 3\n"
                    "1 1 1.0\n")
    _expect_error(path, "promised 3 entries")


def test_empty_file_diagnosed(tmp_path):
    path = tmp_path / "m.mtx"
    path.write_text("")
    _expect_error(path, "missing header", lineno=1)


def test_nonfinite_value_diagnosed(tmp_path):
    path = tmp_path / "m.mtx"
    path.write_text("%%MatrixMarket matrix coordinate real general\n"
                    "1 1 1\n"
                    "1 1 nan\n")
    _expect_error(path, "non-finite", lineno=3)


def test_vector_bad_line_diagnosed(tmp_path):
    path = tmp_path / "v.txt"
    path.write_text("1.0\nabc\n")
    with pytest.raises(MatrixMarketError) as excinfo:
        read_vector(path)
    assert ":2:" in str(excinfo.value)
