"""Dense and sparse primitives used by every solver.

Sparse operators are held as canonical ``scipy.sparse.csr_array`` objects
(sorted, duplicate-free column indices); dense blocks and small cores are
plain float64 :class:`numpy.ndarray` objects.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .errors import DimensionError

__all__ = [
    "as_csr",
    "as_dense",
    "spmm",
    "spmm_transpose",
    "frobenius_inner",
    "frobenius_norm",
    "thin_qr",
    "svd",
    "is_structurally_symmetric",
]


def as_csr(A) -> sp.csr_array:
    """Return `A` as a canonical float64 CSR array.

    Dense input is accepted and converted. Duplicate entries are summed and
    column indices sorted, so ``indptr`` is nondecreasing and ``indices`` is
    strictly increasing within each row.
    """
    if sp.issparse(A):
        M = sp.csr_array(A, dtype=np.float64, copy=True)
    else:
        arr = np.asarray(A, dtype=np.float64)
        if arr.ndim != 2:
            raise DimensionError(f"expected a 2-D matrix, got shape {arr.shape}")
        M = sp.csr_array(arr)
    M.sum_duplicates()
    M.sort_indices()
    return M


def as_dense(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got shape {X.shape}")
    return X


def spmm(A, X) -> np.ndarray:
    """Sparse times dense, ``A @ X``.

    Each output entry is accumulated over the stored entries of one row of
    `A` in increasing column order, so the serial result is bit-reproducible.
    """
    X = as_dense(X)
    if A.shape[1] != X.shape[0]:
        raise DimensionError(f"spmm: A is {A.shape}, X is {X.shape}")
    return np.asarray(A @ X)


def spmm_transpose(A, X) -> np.ndarray:
    """``A.T @ X`` without materialising the transpose."""
    X = as_dense(X)
    if A.shape[0] != X.shape[0]:
        raise DimensionError(f"spmm_transpose: A is {A.shape}, X is {X.shape}")
    return np.asarray(A.T @ X)


def frobenius_inner(X, Y) -> float:
    """Frobenius inner product ``tr(X^T Y)``."""
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if X.shape != Y.shape:
        raise DimensionError(f"frobenius_inner: shapes {X.shape} and {Y.shape} differ")
    return float(np.vdot(X, Y))


def frobenius_norm(X) -> float:
    return float(np.linalg.norm(X))


def thin_qr(X) -> tuple[np.ndarray, np.ndarray]:
    """Householder thin QR with a nonnegative diagonal in ``R``.

    Rank-deficient input is allowed; ``R`` is then singular and the caller
    decides what to do with it.
    """
    X = as_dense(X)
    n, s = X.shape
    if n < s:
        raise DimensionError(f"thin_qr needs n_rows >= n_cols, got {X.shape}")
    Q, R = np.linalg.qr(X, mode="reduced")
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    return Q * signs, R * signs[:, None]


def svd(X) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Thin SVD ``X = U @ diag(sigma) @ V.T`` with nonincreasing `sigma`.

    Note that the third factor is ``V``, not ``V.T``.
    """
    X = as_dense(X)
    U, sigma, Vt = np.linalg.svd(X, full_matrices=False)
    return U, sigma, Vt.T


def is_structurally_symmetric(A, tol: float = 1e-12) -> bool:
    """True when ``|A - A^T|`` is below ``tol`` times the largest entry."""
    if A.shape[0] != A.shape[1]:
        return False
    D = (A - A.T).tocsr()
    if D.nnz == 0:
        return True
    scale = abs(A).max() if A.nnz else 0.0
    return bool(abs(D).max() <= tol * scale)
