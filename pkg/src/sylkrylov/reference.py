"""Baseline solvers: dense matrix-oriented Krylov, truncated low-rank Krylov,
and a dense Kronecker-system oracle."""

from __future__ import annotations

import math
import warnings
from typing import Optional

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .errors import DimensionError, SingularOperator
from .history import PIVOT_COSINE, CategoryTimer, ConvergenceHistory, SolverConfig
from .linalg import as_csr, as_dense, is_structurally_symmetric, spmm, spmm_transpose
from .lowrank import (
    LowRankMatrix,
    SymmetricLowRankMatrix,
    lr_add,
    lr_inner,
    lr_norm,
    lyapunov_apply,
    sylvester_apply,
    sym_add,
    sym_inner,
    sym_norm,
    symmetric_truncate,
    truncate,
)

__all__ = [
    "DenseResult",
    "TruncatedResult",
    "matrix_oriented_cg",
    "matrix_oriented_bicgstab",
    "truncated_cg",
    "truncated_bicgstab",
    "kron_solve",
]

DENSE_ENTRY_LIMIT = 400_000_000
KRON_DIM_LIMIT = 40_000


class DenseResult:
    """Dense iterate plus convergence history."""

    def __init__(self, X, history, status="converged", message=""):
        self.X = X
        self.history = history
        self.status = status
        self.message = message

    @property
    def iterations(self) -> int:
        return self.history.iterations

    def __iter__(self):
        # allows ``X, history = matrix_oriented_cg(...)``
        return iter((self.X, self.history))


class TruncatedResult:
    """Low-rank iterate (general or symmetric) plus convergence history."""

    def __init__(self, X, history, status="converged", message=""):
        self.X = X
        self.history = history
        self.status = status
        self.message = message

    @property
    def iterations(self) -> int:
        return self.history.iterations

    def __iter__(self):
        return iter((self.X, self.history))


def _sylvester_dense(A, B, X):
    return spmm(A, X) + spmm_transpose(B, X.T).T


def _dense_problem(A, B, C):
    A = as_csr(A)
    B = as_csr(B)
    C = as_dense(C)
    n, m = C.shape
    if A.shape != (n, n) or B.shape != (m, m):
        raise DimensionError(f"A {A.shape}, B {B.shape} do not match C {C.shape}")
    if n * m > DENSE_ENTRY_LIMIT:
        raise MemoryError(f"dense iterate of {n}x{m} refused (limit {DENSE_ENTRY_LIMIT} entries)")
    return A, B, C


def matrix_oriented_cg(A, B, C, cfg: Optional[SolverConfig] = None) -> DenseResult:
    """Dense matrix-oriented CG from ``X0 = 0``."""
    cfg = cfg or SolverConfig()
    A, B, C = _dense_problem(A, B, C)
    max_iter = cfg.resolve_max_iter(*C.shape)
    timer = CategoryTimer()
    history = ConvergenceHistory()
    with timer("basic_ops"):
        X = np.zeros_like(C)
        R = C.copy()
        P = R.copy()
        rho = float(np.vdot(R, R))
        r0 = math.sqrt(rho)
    history.append(0, 1.0, timer.lap())
    if r0 == 0.0:
        return DenseResult(X, history)
    for k in range(max_iter):
        with timer("basic_ops"):
            Q = _sylvester_dense(A, B, P)
            denom = float(np.vdot(R, Q))
            if not abs(denom) > cfg.breakdown_tol * rho:
                return DenseResult(X, history, "breakdown", f"<R, Q> = {denom:.3e}")
            alpha = rho / denom
            X += alpha * P
            R -= alpha * Q
            rel = float(np.linalg.norm(R)) / r0
        history.append(k + 1, rel, timer.lap())
        if rel <= cfg.eps_tol:
            return DenseResult(X, history)
        with timer("basic_ops"):
            rho_next = float(np.vdot(R, R))
            P *= rho_next / rho
            P += R
            rho = rho_next
    return DenseResult(X, history, "max_iter", f"no convergence in {max_iter} iterations")


def matrix_oriented_bicgstab(A, B, C, cfg: Optional[SolverConfig] = None) -> DenseResult:
    """Dense matrix-oriented BiCGSTAB from ``X0 = 0`` with shadow residual ``R0``."""
    cfg = cfg or SolverConfig()
    A, B, C = _dense_problem(A, B, C)
    max_iter = cfg.resolve_max_iter(*C.shape)
    timer = CategoryTimer()
    history = ConvergenceHistory()
    with timer("basic_ops"):
        X = np.zeros_like(C)
        R = C.copy()
        Rt = R.copy()
        rt_norm = float(np.linalg.norm(Rt))
        P = R.copy()
        rho = float(np.vdot(Rt, R))
        r0 = float(np.linalg.norm(R))
    history.append(0, 1.0, timer.lap())
    if r0 == 0.0:
        return DenseResult(X, history)
    for k in range(max_iter):
        with timer("basic_ops"):
            Q = _sylvester_dense(A, B, P)
            denom = float(np.vdot(Rt, Q))
            if not abs(denom) > PIVOT_COSINE * rt_norm * np.linalg.norm(Q):
                return DenseResult(X, history, "breakdown", f"<R~0, Q> = {denom:.3e}")
            alpha = rho / denom
            S = R - alpha * Q
            s_norm = float(np.linalg.norm(S))
            T = _sylvester_dense(A, B, S)
            tt = float(np.vdot(T, T))
            if s_norm <= cfg.eps_tol * r0:
                omega = 0.0
            elif not tt > (PIVOT_COSINE * s_norm) ** 2:
                return DenseResult(X, history, "breakdown", f"<T, T> = {tt:.3e}")
            else:
                omega = float(np.vdot(T, S)) / tt
            X += alpha * P + omega * S
            R = S - omega * T
            rel = float(np.linalg.norm(R)) / r0
        history.append(k + 1, rel, timer.lap())
        if rel <= cfg.eps_tol:
            return DenseResult(X, history)
        with timer("basic_ops"):
            rho_next = float(np.vdot(R, Rt))
            if omega == 0.0 or not abs(rho_next) > PIVOT_COSINE * rt_norm * rel * r0:
                return DenseResult(X, history, "breakdown",
                                   f"rho = {rho_next:.3e}, omega = {omega:.3e}")
            beta = (alpha / omega) * (rho_next / rho)
            P = R + beta * (P - omega * Q)
            rho = rho_next
    return DenseResult(X, history, "max_iter", f"no convergence in {max_iter} iterations")


def truncated_cg(A, C1, cfg: Optional[SolverConfig] = None, eps_trunc: float = 1e-12,
                 truncate_Q: bool = False, truncate_R: bool = True,
                 max_rank: Optional[int] = None) -> TruncatedResult:
    """CG with low-rank truncation for ``A X + X A^T = C1 C1^T``.

    Iterates are kept in symmetric low-rank form ``Z D Z^T``. The solution
    and the search direction are always truncated; `truncate_Q` and
    `truncate_R` switch on the optional truncations of the operator image
    and of the explicitly recomputed residual.
    """
    cfg = cfg or SolverConfig()
    A = as_csr(A)
    C1 = as_dense(C1)
    n, s = C1.shape
    if A.shape != (n, n):
        raise DimensionError(f"A {A.shape} does not match C1 {C1.shape}")
    if not is_structurally_symmetric(A):
        raise ValueError("truncated_cg requires a symmetric A")
    max_iter = cfg.resolve_max_iter(n, n)
    timer = CategoryTimer()
    history = ConvergenceHistory()

    def T(M):
        with timer("truncation"):
            return symmetric_truncate(M, eps_trunc, max_rank)

    with timer("basic_ops"):
        X = SymmetricLowRankMatrix(np.zeros((n, 0)), np.zeros((0, 0)))
        R = SymmetricLowRankMatrix(C1.copy(), np.eye(s))
        P = R
        r0 = sym_norm(R)
    history.append(0, 1.0, timer.lap())
    for k in range(max_iter):
        with timer("basic_ops"):
            Q = lyapunov_apply(A, P)
        if truncate_Q:
            Q = T(Q)
        with timer("basic_ops"):
            xi = sym_inner(P, Q)
            if not abs(xi) > cfg.breakdown_tol * sym_inner(P, P):
                return TruncatedResult(X, history, "breakdown", f"xi = {xi:.3e}")
            alpha = sym_inner(R, P) / xi
            X_new = sym_add((1.0, X), (alpha, P))
        X = T(X_new)
        with timer("basic_ops"):
            r = X.rank
            Z = np.hstack([C1, spmm(A, X.Z), X.Z])
            D = np.zeros((s + 2 * r, s + 2 * r))
            D[:s, :s] = np.eye(s)
            D[s:s + r, s + r:] = -X.D
            D[s + r:, s:s + r] = -X.D
            R = SymmetricLowRankMatrix(Z, D)
        if truncate_R:
            R = T(R)
        with timer("basic_ops"):
            rel = sym_norm(R) / r0
        history.append(k + 1, rel, timer.lap())
        if rel <= cfg.eps_tol:
            return TruncatedResult(X, history)
        with timer("basic_ops"):
            beta = -sym_inner(R, Q) / xi
            P_new = sym_add((1.0, R), (beta, P))
        P = T(P_new)
    return TruncatedResult(X, history, "max_iter", f"no convergence in {max_iter} iterations")


def truncated_bicgstab(A, B, C1, C2, cfg: Optional[SolverConfig] = None,
                       eps_trunc: float = 1e-12, truncate_Q: bool = True,
                       truncate_S: bool = True, truncate_T: bool = False,
                       truncate_R: bool = True, residual_variant: str = "recursion",
                       max_rank: Optional[int] = None) -> TruncatedResult:
    """BiCGSTAB with low-rank truncation for ``A X + X B = C1 C2^T``.

    ``residual_variant="recursion"`` updates ``R = S - omega T`` (always
    truncated); ``"explicit"`` recomputes ``C1 C2^T - A X - X B`` and
    truncates it only when `truncate_R` is set. The shadow residual is the
    rank-``s`` initial residual and is never truncated.
    """
    if residual_variant not in ("recursion", "explicit"):
        raise ValueError(f"unknown residual_variant {residual_variant!r}")
    cfg = cfg or SolverConfig()
    A = as_csr(A)
    B = as_csr(B)
    C1 = as_dense(C1)
    C2 = as_dense(C2)
    n, s = C1.shape
    m = C2.shape[0]
    if A.shape != (n, n) or B.shape != (m, m) or C2.shape[1] != s:
        raise DimensionError("A, B, C1, C2 do not conform")
    max_iter = cfg.resolve_max_iter(n, m)
    timer = CategoryTimer()
    history = ConvergenceHistory()

    def T_(M):
        with timer("truncation"):
            return truncate(M, eps_trunc, max_rank)

    with timer("basic_ops"):
        C = LowRankMatrix.from_factors(C1, C2)
        X = LowRankMatrix(np.zeros((n, 0)), np.zeros((0, 0)), np.zeros((m, 0)))
        R = C
        Rt = C
        rt_norm = lr_norm(Rt)
        P = R
        rho = lr_inner(R, Rt)
        r0 = lr_norm(R)
    history.append(0, 1.0, timer.lap())

    def stop(status, msg):
        return TruncatedResult(X, history, status, msg)

    for k in range(max_iter):
        with timer("basic_ops"):
            Q = sylvester_apply(A, B, P)
        if truncate_Q:
            Q = T_(Q)
        with timer("basic_ops"):
            denom = lr_inner(Rt, Q)
            if not abs(denom) > PIVOT_COSINE * rt_norm * lr_norm(Q):
                return stop("breakdown", f"<R~0, Q> = {denom:.3e}")
            alpha = rho / denom
            S = lr_add((1.0, R), (-alpha, Q))
        if truncate_S:
            S = T_(S)
        with timer("basic_ops"):
            s_norm = lr_norm(S)
            Tk = sylvester_apply(A, B, S)
        if truncate_T:
            Tk = T_(Tk)
        with timer("basic_ops"):
            tt = lr_inner(Tk, Tk)
            if s_norm <= cfg.eps_tol * r0:
                omega = 0.0
            elif not tt > (PIVOT_COSINE * s_norm) ** 2:
                return stop("breakdown", f"<T, T> = {tt:.3e}")
            else:
                omega = lr_inner(Tk, S) / tt
            X_new = lr_add((1.0, X), (alpha, P), (omega, S))
        X = T_(X_new)
        if residual_variant == "recursion":
            with timer("basic_ops"):
                R_new = lr_add((1.0, S), (-omega, Tk))
            R = T_(R_new)
        else:
            with timer("basic_ops"):
                AX = sylvester_apply(A, B, X)
                R = lr_add((1.0, C), (-1.0, AX))
            if truncate_R:
                R = T_(R)
        with timer("basic_ops"):
            rel = lr_norm(R) / r0
        history.append(k + 1, rel, timer.lap())
        if rel <= cfg.eps_tol:
            return stop("converged", "")
        with timer("basic_ops"):
            rho_next = lr_inner(Rt, R)
            if omega == 0.0 or not abs(rho_next) > PIVOT_COSINE * rt_norm * rel * r0:
                return stop("breakdown", f"rho = {rho_next:.3e}, omega = {omega:.3e}")
            beta = (alpha / omega) * (rho_next / rho)
            P_new = lr_add((1.0, R), (beta, P), (-beta * omega, Q))
        P = T_(P_new)
        rho = rho_next
    return stop("max_iter", f"no convergence in {max_iter} iterations")


def kron_solve(A, B, C1, C2) -> np.ndarray:
    """Solve ``(I_m kron A + B^T kron I_n) vec(X) = vec(C1 C2^T)`` densely."""
    A = as_csr(A)
    B = as_csr(B)
    C1 = as_dense(C1)
    C2 = as_dense(C2)
    n, m = A.shape[0], B.shape[0]
    if A.shape != (n, n) or B.shape != (m, m) or C1.shape[0] != n or C2.shape[0] != m:
        raise DimensionError("A, B, C1, C2 do not conform")
    if n * m > KRON_DIM_LIMIT:
        raise MemoryError(f"Kronecker system of dimension {n * m} refused "
                          f"(limit {KRON_DIM_LIMIT})")
    F = (sp.kron(sp.identity(m), A) + sp.kron(B.T, sp.identity(n))).toarray()
    c = (C1 @ C2.T).reshape(-1, order="F")
    anorm = np.linalg.norm(F, 1)
    with warnings.catch_warnings():
        # exact singularity is reported below as SingularOperator
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(F, check_finite=True)
    if np.any(np.diag(lu) == 0.0):
        raise SingularOperator("Kronecker-sum operator is exactly singular")
    rcond, info = sla.lapack.dgecon(lu, anorm, norm="1")
    if info != 0 or rcond < np.finfo(float).eps:
        raise SingularOperator(f"Kronecker-sum operator is singular (rcond = {rcond:.3e})")
    x = sla.lu_solve((lu, piv), c)
    return x.reshape((n, m), order="F")
