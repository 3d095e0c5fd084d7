import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from sylkrylov.errors import DimensionError
from sylkrylov.linalg import (
    as_csr,
    frobenius_inner,
    frobenius_norm,
    is_structurally_symmetric,
    spmm,
    spmm_transpose,
    svd,
    thin_qr,
)

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def test_as_csr_canonical():
    A = sp.coo_array(([1.0, 2.0, 3.0], ([0, 0, 1], [1, 1, 0])), shape=(2, 2))
    C = as_csr(A)
    assert C.has_canonical_format
    np.testing.assert_array_equal(C.toarray(), [[0, 3], [3, 0]])
    assert C.dtype == np.float64
    # row pointer invariants
    assert np.all(np.diff(C.indptr) >= 0) and C.indptr[-1] == C.nnz


class TestSpmm:
    def test_identity(self, rng):
        X = rng.standard_normal((3, 2))
        np.testing.assert_array_equal(spmm(sp.identity(3, format="csr"), X), X)

    def test_stencil_row_sums(self):
        T = sp.diags_array([-np.ones(2), 2 * np.ones(3), -np.ones(2)], offsets=[-1, 0, 1])
        np.testing.assert_array_equal(spmm(T, np.ones((3, 1))).ravel(), [1, 0, 1])

    def test_random_vs_dense(self, rng):
        A = sp.random(50, 50, density=0.1, random_state=rng, format="csr")
        X = rng.standard_normal((50, 4))
        ref = A.toarray() @ X
        assert np.linalg.norm(spmm(A, X) - ref) <= 1e-14 * np.linalg.norm(ref)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            spmm(sp.identity(3, format="csr"), np.ones((4, 1)))

    def test_distributes_over_addition(self, rng):
        A = sp.random(40, 40, density=0.2, random_state=rng, format="csr")
        X, Y = rng.standard_normal((2, 40, 3))
        lhs = spmm(A, X + Y)
        assert np.linalg.norm(lhs - spmm(A, X) - spmm(A, Y)) <= 1e-13 * np.linalg.norm(lhs)

    def test_deterministic(self, rng):
        A = sp.random(60, 60, density=0.2, random_state=rng, format="csr")
        X = rng.standard_normal((60, 5))
        assert np.array_equal(spmm(A, X), spmm(A, X))


class TestSpmmTranspose:
    def test_identity(self, rng):
        X = rng.standard_normal((3, 2))
        np.testing.assert_array_equal(spmm_transpose(sp.identity(3, format="csr"), X), X)

    def test_single_entry(self):
        A = sp.csr_array(([5.0], ([1], [0])), shape=(3, 3))
        e2 = np.array([[0.0], [1.0], [0.0]])
        np.testing.assert_array_equal(spmm_transpose(A, e2).ravel(), [5, 0, 0])

    def test_random_vs_dense(self, rng):
        A = sp.random(30, 40, density=0.1, random_state=rng, format="csr")
        X = rng.standard_normal((30, 3))
        ref = A.toarray().T @ X
        assert np.linalg.norm(spmm_transpose(A, X) - ref) <= 1e-14 * np.linalg.norm(ref)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            spmm_transpose(sp.identity(3, format="csr"), np.ones((2, 1)))


class TestFrobenius:
    def test_identity(self):
        assert frobenius_inner(np.eye(2), np.eye(2)) == 2.0

    def test_hand_arithmetic(self):
        assert frobenius_inner([[1, 2], [3, 4]], [[5, 6], [7, 8]]) == 70.0

    def test_random_vs_flattened(self, rng):
        X, Y = rng.standard_normal((2, 7, 5))
        ref = float(np.sum(X.ravel() * Y.ravel()))
        assert abs(frobenius_inner(X, Y) - ref) <= 1e-15 * max(abs(ref), 1.0) * 10

    def test_mismatch(self):
        with pytest.raises(DimensionError):
            frobenius_inner(np.eye(2), np.eye(3))

    @given(arrays(np.float64, (4, 3), elements=finite))
    def test_self_inner_is_squared_norm(self, X):
        v = frobenius_inner(X, X)
        assert v >= 0
        assert v == pytest.approx(frobenius_norm(X) ** 2, rel=1e-12, abs=1e-300)


class TestThinQR:
    def test_identity(self):
        Q, R = thin_qr(np.eye(3))
        np.testing.assert_allclose(Q, np.eye(3), atol=1e-15)
        np.testing.assert_allclose(R, np.eye(3), atol=1e-15)

    def test_single_column(self):
        Q, R = thin_qr(np.array([[3.0], [4.0]]))
        np.testing.assert_allclose(Q.ravel(), [0.6, 0.8], rtol=1e-15)
        np.testing.assert_allclose(R, [[5.0]], rtol=1e-15)

    def test_random_reconstruction(self, rng):
        X = rng.standard_normal((20, 3))
        Q, R = thin_qr(X)
        assert np.linalg.norm(Q.T @ Q - np.eye(3)) <= 1e-12
        assert np.linalg.norm(Q @ R - X) <= 1e-12 * np.linalg.norm(X)
        assert np.all(np.diag(R) >= 0)
        assert np.allclose(R, np.triu(R))

    @pytest.mark.parametrize("s", [1, 8, 64])
    def test_orthogonality_scales(self, rng, s):
        Q, _ = thin_qr(rng.standard_normal((200, s)))
        assert np.linalg.norm(Q.T @ Q - np.eye(s)) <= 1e-12 * s

    def test_rank_deficient_allowed(self):
        X = np.ones((4, 2))
        Q, R = thin_qr(X)
        assert np.linalg.norm(Q @ R - X) <= 1e-12
        assert abs(R[1, 1]) < 1e-12

    def test_wide_rejected(self):
        with pytest.raises(DimensionError):
            thin_qr(np.ones((2, 3)))


class TestSVD:
    def test_diagonal(self):
        _, sig, _ = svd(np.diag([3.0, 1.0]))
        np.testing.assert_allclose(sig, [3, 1])

    def test_rank_one(self, rng):
        u = rng.standard_normal(5)
        v = rng.standard_normal(4)
        u /= np.linalg.norm(u)
        v /= np.linalg.norm(v)
        _, sig, _ = svd(np.outer(u, v))
        assert sig[0] == pytest.approx(1.0, rel=1e-14)
        assert np.all(sig[1:] < 1e-15)

    def test_random_reconstruction(self, rng):
        X = rng.standard_normal((9, 6))
        U, sig, V = svd(X)
        assert np.linalg.norm(U * sig @ V.T - X) <= 1e-12 * np.linalg.norm(X)
        assert np.all(np.diff(sig) <= 0) and np.all(sig >= 0)
        assert np.linalg.norm(U.T @ U - np.eye(6)) <= 1e-12
        assert np.linalg.norm(V.T @ V - np.eye(6)) <= 1e-12


def test_structural_symmetry(rng):
    A = sp.random(10, 10, density=0.3, random_state=rng, format="csr")
    assert is_structurally_symmetric(A + A.T)
    B = sp.csr_array(([1.0], ([0], [1])), shape=(2, 2))
    assert not is_structurally_symmetric(B)
    assert not is_structurally_symmetric(sp.csr_array(np.ones((2, 3))))
