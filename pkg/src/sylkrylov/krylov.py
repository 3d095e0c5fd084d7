"""Incremental block Arnoldi and block Lanczos processes.

A :class:`BlockKrylovBasis` grows an orthonormal basis ``V`` of the block
Krylov space ``span[C, A C, A^2 C, ...]`` one block at a time, together with
the block Hessenberg matrix ``H`` satisfying ``A V_k = V_{k+1} H``.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .errors import Breakdown, DimensionError, RankDeficientStart
from .linalg import as_dense, spmm, spmm_transpose, thin_qr

__all__ = ["BlockKrylovBasis", "basis_init"]

MODES = ("arnoldi", "lanczos")


class BlockKrylovBasis:
    """Orthonormal block Krylov basis with its recurrence matrix.

    Parameters
    ----------
    operator
        Square sparse matrix. When `transpose` is set the basis is built for
        ``operator.T`` instead.
    start_block
        ``n x s`` starting block; it must have full column rank.
    mode
        ``"arnoldi"`` orthogonalizes every new block against all previous
        blocks (block Gram-Schmidt plus one full reorthogonalization pass). ``"lanczos"`` uses only the two most recent blocks, which is
        enough in exact arithmetic when the operator is symmetric.
    transpose
        Build the basis for the transposed operator.
    breakdown_tol
        A new block whose triangular factor has a singular value below
        ``breakdown_tol * ||H||`` is treated as a breakdown.
    deflate
        When False (default) a breakdown raises :class:`Breakdown`. When
        True the block is shrunk to its numerically nonzero directions; if
        none are left the space is marked invariant and further extensions
        are no-ops.
    reorthogonalize
        Lanczos only: orthogonalize against all blocks (twice) instead of
        the last two.
    """

    def __init__(self, operator, start_block, mode="arnoldi", transpose=False,
                 breakdown_tol=1e-12, deflate=False, reorthogonalize=False):
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
        if operator.shape[0] != operator.shape[1]:
            raise DimensionError(f"operator must be square, got {operator.shape}")
        C = as_dense(start_block)
        n, s = C.shape
        if n != operator.shape[0]:
            raise DimensionError(
                f"start block has {n} rows, operator has dimension {operator.shape[0]}")
        if s == 0 or s > n:
            raise RankDeficientStart(f"block size {s} invalid for dimension {n}")

        self.operator = operator
        self.transpose = bool(transpose)
        self.mode = mode
        self.breakdown_tol = float(breakdown_tol)
        self.deflate = bool(deflate)
        self.reorthogonalize = bool(reorthogonalize)
        self.block_size = s
        self.n = n

        Q, R = thin_qr(C)
        sv = np.linalg.svd(R, compute_uv=False)
        if sv[0] == 0.0 or sv[-1] < 1e-12 * sv[0]:
            raise RankDeficientStart(
                f"start block is rank deficient (sigma_min/sigma_max = "
                f"{sv[-1] / sv[0] if sv[0] else 0.0:.3e})")
        self.R = R

        cap = max(4 * s, 8)
        self._V = np.empty((n, cap))
        self._V[:, :s] = Q
        self._H = np.zeros((cap, cap))
        self._offsets = [0, s]
        # number of blocks whose image under the operator has been processed
        self._processed = 0
        # basis size right after block j was processed (rows of its H column)
        self._row_end: list[int] = []
        self._hnorm2 = 0.0
        self.exhausted = False
        self._coo_rows: list[np.ndarray] = []
        self._coo_cols: list[np.ndarray] = []
        self._coo_vals: list[np.ndarray] = []
        self._H_csr = None

    # -- read access -----------------------------------------------------

    @property
    def k(self) -> int:
        """Number of blocks currently in the basis."""
        return len(self._offsets) - 1

    @property
    def size(self) -> int:
        """Number of basis columns."""
        return self._offsets[-1]

    @property
    def processed_cols(self) -> int:
        """Number of columns of ``H`` that are filled in."""
        return self._offsets[self._processed]

    @property
    def V(self) -> np.ndarray:
        return self._V[:, :self.size]

    @property
    def H(self) -> np.ndarray:
        """Recurrence matrix, ``size x processed_cols``."""
        return self._H[:self.size, :self.processed_cols]

    @property
    def offsets(self) -> tuple[int, ...]:
        return tuple(self._offsets)

    def rows_for(self, ncols: int) -> int:
        """Rows of ``H`` coupled to its leading `ncols` columns.

        `ncols` must be a block boundary among the processed blocks.
        """
        if ncols == 0:
            return 0
        j = self._offsets.index(ncols) - 1
        if j >= self._processed:
            raise ValueError(f"block ending at column {ncols} has not been processed")
        return self._row_end[j]

    def hessenberg_norm(self) -> float:
        return float(np.sqrt(self._hnorm2))

    def H_times(self, P: np.ndarray) -> np.ndarray:
        """``H[:rows_for(p), :p] @ P`` for ``p = P.shape[0]``.

        In Lanczos mode the block tridiagonal structure is exploited through
        a sparse copy of ``H``.
        """
        p = P.shape[0]
        rows = self.rows_for(p)
        if self.mode == "lanczos" and not self.reorthogonalize:
            Hs = self._sparse_H()
            return np.asarray(Hs[:rows, :p] @ P)
        return self._H[:rows, :p] @ P

    # -- growth ------------------------------------------------------------

    def _apply(self, X: np.ndarray) -> np.ndarray:
        if self.transpose:
            return spmm_transpose(self.operator, X)
        return spmm(self.operator, X)

    def _ensure_capacity(self, ncols: int) -> None:
        cap = self._V.shape[1]
        if ncols <= cap:
            return
        new_cap = max(ncols, 2 * cap)
        V = np.empty((self.n, new_cap))
        V[:, :self.size] = self.V
        self._V = V
        H = np.zeros((new_cap, new_cap))
        H[:cap, :cap] = self._H
        self._H = H

    def _sparse_H(self):
        if self._H_csr is None:
            if self._coo_vals:
                rows = np.concatenate(self._coo_rows)
                cols = np.concatenate(self._coo_cols)
                vals = np.concatenate(self._coo_vals)
            else:
                rows = cols = np.zeros(0, dtype=np.int64)
                vals = np.zeros(0)
            shape = (self.size, self.processed_cols)
            self._H_csr = sp.csr_array((vals, (rows, cols)), shape=shape)
        return self._H_csr

    def extend(self) -> int:
        """Advance the process by one block.

        Returns the number of columns appended (0 once the space is
        invariant). On :class:`Breakdown` the basis is left unchanged.
        """
        if self.exhausted:
            return 0
        j = self._processed
        lo, hi = self._offsets[j], self._offsets[j + 1]
        if j + 1 < self.k:
            raise RuntimeError("basis is in an inconsistent state")
        W = self._apply(self._V[:, lo:hi])

        # two passes of block Gram-Schmidt against the target window: the
        # whole basis (arnoldi / reorthogonalize) or the last two blocks
        if self.mode == "arnoldi" or self.reorthogonalize:
            start = 0
        else:
            start = self._offsets[max(0, j - 1)]
        Vt = self._V[:, start:hi]
        coeffs = np.zeros((hi, hi - lo))
        for _ in range(2):
            h = Vt.T @ W
            W -= Vt @ h
            coeffs[start:] += h

        Q, R = thin_qr(W)
        hnorm2 = self._hnorm2 + float(np.sum(coeffs ** 2)) + float(np.sum(R ** 2))
        threshold = self.breakdown_tol * np.sqrt(hnorm2)
        sv = np.linalg.svd(R, compute_uv=False)
        if sv.size and sv[-1] < threshold:
            if not self.deflate:
                raise Breakdown(
                    f"block {j + 1}: smallest singular value {sv[-1]:.3e} "
                    f"below {threshold:.3e}")
            U, sig, Vt = np.linalg.svd(W, full_matrices=False)
            keep = sig > threshold
            Q = U[:, keep]
            R = sig[keep, None] * Vt[keep]
            hnorm2 = self._hnorm2 + float(np.sum(coeffs ** 2)) + float(np.sum(R ** 2))

        snew = Q.shape[1]
        self._ensure_capacity(hi + snew)
        self._H[:hi, lo:hi] = coeffs
        if snew:
            self._V[:, hi:hi + snew] = Q
            self._H[hi:hi + snew, lo:hi] = R
            self._offsets.append(hi + snew)
        else:
            self.exhausted = True
        self._processed += 1
        self._row_end.append(self.size)
        self._hnorm2 = hnorm2

        block = self._H[:self.size, lo:hi]
        r, c = np.nonzero(block)
        self._coo_rows.append(r)
        self._coo_cols.append(c + lo)
        self._coo_vals.append(block[r, c])
        self._H_csr = None
        return snew


def basis_init(operator, start_block, mode="arnoldi", transpose=False, **kwargs):
    """Start a basis from `start_block`; returns ``(basis, R)`` with ``start_block = V_1 R``."""
    basis = BlockKrylovBasis(operator, start_block, mode=mode, transpose=transpose, **kwargs)
    return basis, basis.R
