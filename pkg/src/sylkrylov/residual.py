"""Relative residual ``||C1 C2^T - A X - X B|| / ||C1 C2^T||`` for any solution format."""

from __future__ import annotations

import numpy as np
import scipy.linalg as sla

from .errors import DimensionError
from .factorized import FactorizedSolution
from .linalg import as_csr, as_dense, spmm, spmm_transpose
from .lowrank import LowRankMatrix, SymmetricLowRankMatrix

__all__ = ["true_residual"]


def _r_factor(F):
    return sla.qr(F, mode="r")[0][:min(F.shape), :] if F.size else np.zeros((0, F.shape[1]))


def _factored_norm(L, Rt):
    # ||L Rt^T|| through the triangular factors of both sides
    RL = _r_factor(L)
    RR = _r_factor(Rt)
    return float(np.linalg.norm(RL @ RR.T))


def true_residual(A, B, C1, C2, sol) -> float:
    """Relative residual of `sol` without forming the dense solution.

    `sol` may be a :class:`FactorizedSolution`, :class:`LowRankMatrix`,
    :class:`SymmetricLowRankMatrix` or a dense ndarray. ``B=None`` means the
    Lyapunov case ``B = A^T`` and ``C2=None`` means ``C2 = C1``.
    """
    A = as_csr(A)
    B = A.T.tocsr() if B is None else as_csr(B)
    C1 = as_dense(C1)
    C2 = C1 if C2 is None else as_dense(C2)
    n, m = A.shape[0], B.shape[0]
    if C1.shape[0] != n or C2.shape[0] != m or C1.shape[1] != C2.shape[1]:
        raise DimensionError("C1, C2 do not match A, B")
    rhs = _factored_norm(C1, C2)

    if isinstance(sol, np.ndarray):
        if sol.shape != (n, m):
            raise DimensionError(f"solution is {sol.shape}, expected {(n, m)}")
        res = C1 @ C2.T - spmm(A, sol) - spmm_transpose(B, sol.T).T
        return float(np.linalg.norm(res)) / rhs

    if isinstance(sol, FactorizedSolution):
        U, S, V = sol.V, sol.core, sol.W
    elif isinstance(sol, LowRankMatrix):
        U, S, V = sol.U, sol.S, sol.V
    elif isinstance(sol, SymmetricLowRankMatrix):
        U, S, V = sol.Z, sol.D, sol.Z
    else:
        raise TypeError(f"unsupported solution type {type(sol).__name__}")
    if U.shape[0] != n or V.shape[0] != m or S.shape != (U.shape[1], V.shape[1]):
        raise DimensionError("solution factors do not match the problem")

    US = U @ S
    L = np.hstack([C1, -spmm(A, US), -US])
    Rt = np.hstack([C2, V, spmm_transpose(B, V)])
    return _factored_norm(L, Rt) / rhs
