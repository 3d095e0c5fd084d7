import numpy as np
import pytest
import scipy.sparse as sp

from sylkrylov.errors import MatrixMarketError
from sylkrylov.mmio import read_matrix_market, write_matrix_market


def _write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_identity_coordinate(tmp_path):
    p = _write(tmp_path, "I.mtx", "%%MatrixMarket matrix coordinate real general\n"
                                   "2 2 2\n1 1 1.0\n2 2 1.0\n")
    A = read_matrix_market(p)
    assert sp.issparse(A) and A.format == "csr"
    np.testing.assert_array_equal(A.toarray(), np.eye(2))


def test_array_column(tmp_path):
    p = _write(tmp_path, "c.mtx", "%%MatrixMarket matrix array real general\n3 1\n1\n2\n3\n")
    X = read_matrix_market(p)
    assert isinstance(X, np.ndarray) and X.shape == (3, 1)
    np.testing.assert_array_equal(X.ravel(), [1, 2, 3])


def test_symmetric_expanded(tmp_path):
    p = _write(tmp_path, "s.mtx", "%%MatrixMarket matrix coordinate real symmetric\n"
                                   "2 2 2\n1 1 2.0\n2 1 -1.0\n")
    np.testing.assert_array_equal(read_matrix_market(p).toarray(), [[2, -1], [-1, 0]])


def test_sparse_round_trip_exact(tmp_path, rng):
    A = sp.random(30, 20, density=0.2, random_state=rng, format="csr")
    A.data = rng.standard_normal(A.nnz) * 10.0 ** rng.integers(-10, 10, A.nnz)
    write_matrix_market(A, tmp_path / "A.mtx")
    B = read_matrix_market(tmp_path / "A.mtx")
    A.sort_indices()
    np.testing.assert_array_equal(B.indptr, A.indptr)
    np.testing.assert_array_equal(B.indices, A.indices)
    np.testing.assert_array_equal(B.data, A.data)


def test_dense_round_trip_exact(tmp_path, rng):
    X = rng.standard_normal((7, 3)) * 1e-7
    write_matrix_market(X, tmp_path / "X.mtx")
    np.testing.assert_array_equal(read_matrix_market(tmp_path / "X.mtx"), X)


def test_empty_sparse(tmp_path):
    write_matrix_market(sp.csr_array((3, 4)), tmp_path / "E.mtx")
    E = read_matrix_market(tmp_path / "E.mtx")
    assert E.shape == (3, 4) and E.nnz == 0


def test_one_by_one_dense(tmp_path):
    write_matrix_market(np.array([[2.5]]), tmp_path / "x.mtx")
    np.testing.assert_array_equal(read_matrix_market(tmp_path / "x.mtx"), [[2.5]])


@pytest.mark.parametrize("text", [
    "not a matrix market file\n",
    "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n",
    "%%MatrixMarket matrix coordinate complex general\n1 1 1\n1 1 1.0 2.0\n",
    "%%MatrixMarket matrix coordinate pattern general\n1 1 1\n1 1\n",
])
def test_malformed(tmp_path, text):
    p = _write(tmp_path, "bad.mtx", text)
    with pytest.raises(MatrixMarketError):
        read_matrix_market(p)
