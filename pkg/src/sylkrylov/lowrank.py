"""Low-rank matrix formats and the truncation operator.

``LowRankMatrix`` stores ``U @ S @ V.T`` with a general square core;
``SymmetricLowRankMatrix`` stores ``Z @ D @ Z.T`` with a symmetric core. All
arithmetic is done on the factors: addition stacks them, inner products go
through small Gram matrices and the Sylvester/Lyapunov operator doubles the
factor width.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg as sla

from .errors import DimensionError
from .linalg import spmm, spmm_transpose, svd

__all__ = [
    "LowRankMatrix",
    "SymmetricLowRankMatrix",
    "truncate",
    "symmetric_truncate",
    "lr_add",
    "lr_inner",
    "lr_norm",
    "sylvester_apply",
    "sym_add",
    "sym_inner",
    "sym_norm",
    "lyapunov_apply",
]


@dataclass
class LowRankMatrix:
    U: np.ndarray
    S: np.ndarray
    V: np.ndarray
    orth_u: bool = False
    orth_v: bool = False

    def __post_init__(self):
        if self.S.shape != (self.U.shape[1], self.V.shape[1]):
            raise DimensionError(
                f"core {self.S.shape} does not match factors {self.U.shape}, {self.V.shape}")

    @classmethod
    def from_factors(cls, L, R) -> "LowRankMatrix":
        """``L @ R.T`` with an identity core."""
        L = np.atleast_2d(np.asarray(L, dtype=np.float64))
        R = np.atleast_2d(np.asarray(R, dtype=np.float64))
        return cls(L, np.eye(L.shape[1]), R)

    @property
    def shape(self) -> tuple[int, int]:
        return self.U.shape[0], self.V.shape[0]

    @property
    def rank(self) -> int:
        return self.U.shape[1]

    def to_dense(self) -> np.ndarray:
        return self.U @ self.S @ self.V.T


@dataclass
class SymmetricLowRankMatrix:
    Z: np.ndarray
    D: np.ndarray
    orth: bool = False

    def __post_init__(self):
        r = self.Z.shape[1]
        if self.D.shape != (r, r):
            raise DimensionError(f"core {self.D.shape} does not match factor {self.Z.shape}")

    @property
    def shape(self) -> tuple[int, int]:
        return self.Z.shape[0], self.Z.shape[0]

    @property
    def rank(self) -> int:
        return self.Z.shape[1]

    def to_dense(self) -> np.ndarray:
        return self.Z @ self.D @ self.Z.T

    def as_general(self) -> LowRankMatrix:
        return LowRankMatrix(self.Z, self.D, self.Z, self.orth, self.orth)


def _orth(F: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # economy QR that also accepts wide factors (more columns than rows)
    Q, R = sla.qr(F, mode="economic")
    return Q, R


def _keep_count(values: np.ndarray, eps: float, max_rank: Optional[int]) -> int:
    if values.size == 0 or values[0] == 0.0:
        return 0
    r = int(np.count_nonzero(values >= eps * values[0]))
    if max_rank is not None:
        r = min(r, max_rank)
    return r


def truncate(M: LowRankMatrix, eps: float, max_rank: Optional[int] = None) -> LowRankMatrix:
    """Recompress `M`, dropping singular values below ``eps * sigma_1``.

    The result has orthonormal outer factors and a diagonal core. The
    Frobenius error equals the root sum of squares of the dropped singular
    values (up to rounding).
    """
    if eps < 0:
        raise ValueError(f"eps must be nonnegative, got {eps}")
    n, m = M.shape
    if M.rank == 0:
        return LowRankMatrix(np.zeros((n, 0)), np.zeros((0, 0)), np.zeros((m, 0)), True, True)
    Qu, Ru = _orth(M.U)
    Qv, Rv = _orth(M.V)
    Uc, sigma, Vc = svd(Ru @ M.S @ Rv.T)
    r = _keep_count(sigma, eps, max_rank)
    return LowRankMatrix(Qu @ Uc[:, :r], np.diag(sigma[:r]), Qv @ Vc[:, :r], True, True)


def symmetric_truncate(M: SymmetricLowRankMatrix, eps: float,
                       max_rank: Optional[int] = None) -> SymmetricLowRankMatrix:
    """Symmetric recompression; eigenvalues with ``|lambda| < eps * |lambda_1|`` are dropped."""
    if eps < 0:
        raise ValueError(f"eps must be nonnegative, got {eps}")
    n = M.shape[0]
    if M.rank == 0:
        return SymmetricLowRankMatrix(np.zeros((n, 0)), np.zeros((0, 0)), True)
    Q, R = _orth(M.Z)
    core = R @ M.D @ R.T
    core = 0.5 * (core + core.T)
    lam, E = np.linalg.eigh(core)
    order = np.argsort(-np.abs(lam), kind="stable")
    lam, E = lam[order], E[:, order]
    r = _keep_count(np.abs(lam), eps, max_rank)
    return SymmetricLowRankMatrix(Q @ E[:, :r], np.diag(lam[:r]), True)


# -- general low-rank arithmetic ---------------------------------------------

def lr_add(*terms: tuple[float, LowRankMatrix]) -> LowRankMatrix:
    """``sum(c_i * M_i)`` by stacking factors; no flops on the large side."""
    U = np.hstack([M.U for _, M in terms])
    V = np.hstack([M.V for _, M in terms])
    S = sla.block_diag(*[c * M.S for c, M in terms])
    return LowRankMatrix(U, np.atleast_2d(S).reshape(U.shape[1], V.shape[1]), V)


def lr_inner(M1: LowRankMatrix, M2: LowRankMatrix) -> float:
    """``tr(S1^T (U1^T U2) S2 (V2^T V1))``, small products first."""
    Gu = M1.U.T @ M2.U
    Gv = M2.V.T @ M1.V
    return float(np.vdot(M1.S, Gu @ M2.S @ Gv))


def lr_norm(M: LowRankMatrix) -> float:
    """Frobenius norm, computed from orthogonalized factors."""
    if M.rank == 0:
        return 0.0
    if M.orth_u and M.orth_v:
        return float(np.linalg.norm(M.S))
    Ru = _orth(M.U)[1] if not M.orth_u else np.eye(M.rank)
    Rv = _orth(M.V)[1] if not M.orth_v else np.eye(M.V.shape[1])
    return float(np.linalg.norm(Ru @ M.S @ Rv.T))


def sylvester_apply(A, B, M: LowRankMatrix) -> LowRankMatrix:
    """``A M + M B`` as ``[A U, U] diag(S, S) [V, B^T V]^T``."""
    AU = spmm(A, M.U)
    BtV = spmm_transpose(B, M.V)
    U = np.hstack([AU, M.U])
    V = np.hstack([M.V, BtV])
    return LowRankMatrix(U, sla.block_diag(M.S, M.S), V)


# -- symmetric low-rank arithmetic -------------------------------------------

def sym_add(*terms: tuple[float, SymmetricLowRankMatrix]) -> SymmetricLowRankMatrix:
    Z = np.hstack([M.Z for _, M in terms])
    D = sla.block_diag(*[c * M.D for c, M in terms])
    return SymmetricLowRankMatrix(Z, np.atleast_2d(D).reshape(Z.shape[1], Z.shape[1]))


def sym_inner(M1: SymmetricLowRankMatrix, M2: SymmetricLowRankMatrix) -> float:
    G = M1.Z.T @ M2.Z
    return float(np.vdot(M1.D, G @ M2.D @ G.T))


def sym_norm(M: SymmetricLowRankMatrix) -> float:
    if M.rank == 0:
        return 0.0
    if M.orth:
        return float(np.linalg.norm(M.D))
    R = _orth(M.Z)[1]
    return float(np.linalg.norm(R @ M.D @ R.T))


def lyapunov_apply(A, M: SymmetricLowRankMatrix) -> SymmetricLowRankMatrix:
    """``A M + M A^T`` as ``[A Z, Z] [[0, D], [D, 0]] [A Z, Z]^T``."""
    r = M.rank
    Z = np.hstack([spmm(A, M.Z), M.Z])
    D = np.zeros((2 * r, 2 * r))
    D[:r, r:] = M.D
    D[r:, :r] = M.D
    return SymmetricLowRankMatrix(Z, D)
