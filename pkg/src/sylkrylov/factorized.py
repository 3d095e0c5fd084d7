"""Factorized CG and BiCGSTAB for ``A X + X B = C1 C2^T``.

Every iterate of the matrix-oriented methods started from ``X0 = 0`` lies in
the tensor product of the block Krylov spaces ``K(A, C1)`` and ``K(B^T, C2)``.
The solvers below therefore keep each iterate as ``V @ core @ W.T`` where
``V`` and ``W`` are orthonormal block Krylov bases and only the small core is
updated. Additions and inner products act on the cores directly and the
Sylvester operator reduces to products with the block Hessenberg matrices of
the two bases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DimensionError
from .history import PIVOT_COSINE, CategoryTimer, ConvergenceHistory, SolverConfig
from .krylov import BlockKrylovBasis
from .linalg import as_csr, as_dense, is_structurally_symmetric

__all__ = [
    "FactorizedSolution",
    "embed",
    "small_sylvester_apply",
    "windowed_inner",
    "factorized_cg",
    "factorized_cg_lyapunov",
    "factorized_bicgstab",
]

STATUSES = ("converged", "max_iter", "breakdown")


@dataclass
class FactorizedSolution:
    """Approximate solution ``X = V @ core @ W.T``."""

    V: np.ndarray
    core: np.ndarray
    W: np.ndarray
    history: ConvergenceHistory = field(default_factory=ConvergenceHistory)
    status: str = "converged"
    message: str = ""

    @property
    def iterations(self) -> int:
        return self.history.iterations

    @property
    def rank(self) -> tuple[int, int]:
        return self.core.shape

    def to_dense(self) -> np.ndarray:
        return self.V @ self.core @ self.W.T


def embed(M, target) -> np.ndarray:
    """Zero-pad `M` into the upper-left corner of a larger matrix.

    `target` is either an int (square result) or a ``(rows, cols)`` pair.
    """
    M = np.asarray(M, dtype=np.float64)
    rows, cols = (target, target) if np.isscalar(target) else target
    if rows < M.shape[0] or cols < M.shape[1]:
        raise DimensionError(f"cannot embed {M.shape} into {(rows, cols)}")
    if (rows, cols) == M.shape:
        return M.copy()
    out = np.zeros((rows, cols))
    out[:M.shape[0], :M.shape[1]] = M
    return out


def small_sylvester_apply(P, H, G) -> np.ndarray:
    """Core of ``A (V P W^T) + (V P W^T) B`` in the extended bases.

    With ``A V = V+ H`` and ``B^T W = W+ G`` the result ``Q`` satisfies
    ``A (V P W^T) + (V P W^T) B = V+ Q W+^T``. It equals
    ``[H P, 0] + [P G^T; 0]``.
    """
    P = np.asarray(P, dtype=np.float64)
    H = np.asarray(H, dtype=np.float64)
    G = np.asarray(G, dtype=np.float64)
    if H.shape[1] != P.shape[0] or G.shape[1] != P.shape[1]:
        raise DimensionError(
            f"small_sylvester_apply: P {P.shape}, H {H.shape}, G {G.shape} do not conform")
    if H.shape[0] < P.shape[0] or G.shape[0] < P.shape[1]:
        raise DimensionError("H and G must have at least as many rows as columns")
    out = np.zeros((H.shape[0], G.shape[0]))
    out[:, :P.shape[1]] = H @ P
    out[:P.shape[0], :] += P @ G.T
    return out


def windowed_inner(R, Q) -> float:
    """``<R, Q[:R.rows, :R.cols]>`` without copying the window."""
    R = np.asarray(R)
    r, c = R.shape
    if Q.shape[0] < r or Q.shape[1] < c:
        raise DimensionError(f"window {R.shape} exceeds {Q.shape}")
    return float(np.vdot(R, Q[:r, :c]))


def _apply(Vb: BlockKrylovBasis, Wb: BlockKrylovBasis, P: np.ndarray) -> np.ndarray:
    # small_sylvester_apply with the structure-aware H products of each basis
    HP = Vb.H_times(P)
    GPt = Wb.H_times(P.T)
    out = np.zeros((HP.shape[0], GPt.shape[0]))
    out[:, :P.shape[1]] = HP
    out[:P.shape[0], :] += GPt.T
    return out


def _apply_sym(Vb: BlockKrylovBasis, P: np.ndarray) -> np.ndarray:
    # Lyapunov case: P symmetric and G = H, so Q = M + M^T with M = [H P, 0]
    HP = Vb.H_times(P)
    M = np.zeros((HP.shape[0], HP.shape[0]))
    M[:, :P.shape[1]] = HP
    return M + M.T


def _check_problem(A, B, C1, C2):
    A = as_csr(A)
    B = as_csr(B)
    C1 = as_dense(C1)
    C2 = as_dense(C2)
    if A.shape[0] != A.shape[1] or B.shape[0] != B.shape[1]:
        raise DimensionError(f"A {A.shape} and B {B.shape} must be square")
    if C1.shape[0] != A.shape[0] or C2.shape[0] != B.shape[0]:
        raise DimensionError(f"C1 {C1.shape} / C2 {C2.shape} do not match A, B")
    if C1.shape[1] != C2.shape[1]:
        raise DimensionError("C1 and C2 must have the same number of columns")
    return A, B, C1, C2


def _solution(Vb, Wb, core, history, status, message=""):
    r, c = core.shape
    return FactorizedSolution(V=Vb.V[:, :r].copy(), core=core,
                              W=Wb.V[:, :c].copy(), history=history,
                              status=status, message=message)


def _cg(Vb, Wb, cfg, max_iter, timer, callback, symmetric):
    history = ConvergenceHistory()
    with timer("basic_ops"):
        R = Vb.R @ Wb.R.T
        if symmetric:
            R = 0.5 * (R + R.T)
        P = R.copy()
        X = np.zeros((0, 0))
        rho = float(np.vdot(R, R))
        r0 = math.sqrt(rho)
    history.append(0, 1.0, timer.lap())

    for k in range(max_iter):
        with timer("krylov_process"):
            Vb.extend()
            if not symmetric:
                Wb.extend()
        with timer("basic_ops"):
            Q = _apply_sym(Vb, P) if symmetric else _apply(Vb, Wb, P)
            denom = windowed_inner(R, Q)
            if not abs(denom) > cfg.breakdown_tol * rho:
                return _solution(Vb, Wb, X, history, "breakdown",
                                 f"<R, Q> = {denom:.3e} at iteration {k}")
            alpha = rho / denom
            X = embed(X, P.shape)
            X += alpha * P
            R = embed(R, Q.shape)
            R -= alpha * Q
            rel = float(np.linalg.norm(R)) / r0
        history.append(k + 1, rel, timer.lap())
        if callback is not None:
            callback(k + 1, Vb.V[:, :X.shape[0]], X, Wb.V[:, :X.shape[1]])
        if rel <= cfg.eps_tol:
            return _solution(Vb, Wb, X, history, "converged")
        with timer("basic_ops"):
            rho_next = float(np.vdot(R, R))
            beta = rho_next / rho
            P = embed(beta * P, R.shape)
            P += R
            rho = rho_next
    return _solution(Vb, Wb, X, history, "max_iter",
                     f"no convergence in {max_iter} iterations")


def factorized_cg(A, B, C1, C2, cfg: Optional[SolverConfig] = None,
                  callback: Optional[Callable] = None) -> FactorizedSolution:
    """Factorized CG for symmetric positive definite `A` and `B`.

    Parameters
    ----------
    A, B
        Sparse symmetric positive definite matrices (``n x n`` and ``m x m``).
        Symmetry is checked; definiteness is the caller's responsibility.
    C1, C2
        Right-hand side factors, ``n x s`` and ``m x s`` with full column rank.
    cfg
        Stopping and breakdown parameters.
    callback
        Called as ``callback(iteration, V, core, W)`` after every update of
        the iterate.

    Returns
    -------
    FactorizedSolution
        ``V @ core @ W.T`` approximates ``X``. After ``k`` iterations without
        deflation the core is ``k*s x k*s``. ``status`` reports convergence,
        iteration exhaustion or breakdown; the history holds ``||R_k|| /
        ||R_0||`` computed from the cores.
    """
    cfg = cfg or SolverConfig()
    A, B, C1, C2 = _check_problem(A, B, C1, C2)
    if not is_structurally_symmetric(A) or not is_structurally_symmetric(B):
        raise ValueError("factorized_cg requires symmetric A and B")
    timer = CategoryTimer()
    with timer("krylov_process"):
        opts = dict(mode="lanczos", breakdown_tol=cfg.breakdown_tol, deflate=True,
                    reorthogonalize=cfg.reorthogonalize)
        Vb = BlockKrylovBasis(A, C1, **opts)
        Wb = BlockKrylovBasis(B, C2, transpose=True, **opts)
    max_iter = cfg.resolve_max_iter(A.shape[0], B.shape[0])
    return _cg(Vb, Wb, cfg, max_iter, timer, callback, symmetric=False)


def factorized_cg_lyapunov(A, C1, cfg: Optional[SolverConfig] = None,
                           callback: Optional[Callable] = None) -> FactorizedSolution:
    """Factorized CG for ``A X + X A^T = C1 C1^T`` with a single basis.

    The returned solution has ``W`` equal to ``V`` and a symmetric core.
    """
    cfg = cfg or SolverConfig()
    A = as_csr(A)
    A, _, C1, _ = _check_problem(A, A, C1, C1)
    if not is_structurally_symmetric(A):
        raise ValueError("factorized_cg_lyapunov requires a symmetric A")
    timer = CategoryTimer()
    with timer("krylov_process"):
        Vb = BlockKrylovBasis(A, C1, mode="lanczos", breakdown_tol=cfg.breakdown_tol,
                              deflate=True, reorthogonalize=cfg.reorthogonalize)
    max_iter = cfg.resolve_max_iter(A.shape[0], A.shape[0])
    return _cg(Vb, Vb, cfg, max_iter, timer, callback, symmetric=True)


def factorized_bicgstab(A, B, C1, C2, cfg: Optional[SolverConfig] = None,
                        callback: Optional[Callable] = None) -> FactorizedSolution:
    """Factorized BiCGSTAB for general square `A`, `B`.

    Each iteration advances both block Arnoldi processes twice, so after
    ``k`` iterations the core is ``2*k*s x 2*k*s`` (without deflation). The
    shadow residual is the initial residual. Arguments and return value are
    as in :func:`factorized_cg`.
    """
    cfg = cfg or SolverConfig()
    A, B, C1, C2 = _check_problem(A, B, C1, C2)
    timer = CategoryTimer()
    with timer("krylov_process"):
        opts = dict(mode="arnoldi", breakdown_tol=cfg.breakdown_tol, deflate=True)
        Vb = BlockKrylovBasis(A, C1, **opts)
        Wb = BlockKrylovBasis(B, C2, transpose=True, **opts)
    max_iter = cfg.resolve_max_iter(A.shape[0], B.shape[0])

    history = ConvergenceHistory()
    with timer("basic_ops"):
        R = Vb.R @ Wb.R.T
        R_shadow = R.copy()
        shadow_norm = float(np.linalg.norm(R_shadow))
        P = R.copy()
        X = np.zeros((0, 0))
        rho = float(np.vdot(R_shadow, R))
        r0 = float(np.linalg.norm(R))
    history.append(0, 1.0, timer.lap())

    def fail(k, msg):
        return _solution(Vb, Wb, X, history, "breakdown", msg)

    for k in range(max_iter):
        with timer("krylov_process"):
            Vb.extend()
            Wb.extend()
        with timer("basic_ops"):
            Q = _apply(Vb, Wb, P)
            denom = windowed_inner(R_shadow, Q)
            if not abs(denom) > PIVOT_COSINE * shadow_norm * np.linalg.norm(Q):
                return fail(k, f"<R~0, Q> = {denom:.3e} at iteration {k}")
            alpha = rho / denom
            S = embed(R, Q.shape)
            S -= alpha * Q
            s_norm = float(np.linalg.norm(S))
        with timer("krylov_process"):
            Vb.extend()
            Wb.extend()
        with timer("basic_ops"):
            T = _apply(Vb, Wb, S)
            tt = float(np.vdot(T, T))
            if s_norm <= cfg.eps_tol * r0:
                # S already meets the stopping rule; the stabilising step is void
                omega = 0.0
            elif not tt > (PIVOT_COSINE * s_norm) ** 2:
                return fail(k, f"<T, T> = {tt:.3e} at iteration {k}")
            else:
                omega = windowed_inner(S, T) / tt
            X = embed(X, S.shape)
            X[:P.shape[0], :P.shape[1]] += alpha * P
            X += omega * S
            R = embed(S, T.shape)
            R -= omega * T
            rel = float(np.linalg.norm(R)) / r0
        history.append(k + 1, rel, timer.lap())
        if callback is not None:
            callback(k + 1, Vb.V[:, :X.shape[0]], X, Wb.V[:, :X.shape[1]])
        if rel <= cfg.eps_tol:
            return _solution(Vb, Wb, X, history, "converged")
        with timer("basic_ops"):
            rho_next = windowed_inner(R_shadow, R)
            if omega == 0.0 or not abs(rho_next) > PIVOT_COSINE * shadow_norm * rel * r0:
                return fail(k + 1, f"rho = {rho_next:.3e}, omega = {omega:.3e} "
                                   f"at iteration {k + 1}")
            beta = (alpha / omega) * (rho_next / rho)
            D = embed(P, R.shape)
            D[:Q.shape[0], :Q.shape[1]] -= omega * Q
            P = R + beta * D
            rho = rho_next
    return _solution(Vb, Wb, X, history, "max_iter",
                     f"no convergence in {max_iter} iterations")
