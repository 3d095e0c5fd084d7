"""Deterministic test problems.

The 2-D Laplacian and the 3-D convection-diffusion operator use the
unscaled stencil (no division by ``h**2``); Krylov iteration counts are
invariant under that scaling.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .linalg import as_csr

__all__ = [
    "ProblemInstance",
    "laplacian_2d",
    "convection_diffusion_3d",
    "random_rhs",
    "make_problem",
    "EXAMPLES",
    "RNG_NAME",
]

# numpy Generator on PCG64, normals by numpy's ziggurat sampler (numpy >= 1.17)
RNG_NAME = "numpy.random.PCG64/standard_normal-ziggurat"

DEFAULT_CONVECTION = (10.0, 10.0, 10.0)


def _tridiag(n: int, lower: float, diag: float, upper: float) -> sp.csr_array:
    return sp.diags_array([lower * np.ones(n - 1), diag * np.ones(n), upper * np.ones(n - 1)],
                          offsets=[-1, 0, 1], format="csr")


def laplacian_2d(grid: int) -> sp.csr_array:
    """Five-point Laplacian ``I kron T + T kron I``, ``T = tridiag(-1, 2, -1)``."""
    if grid < 2:
        raise ValueError(f"grid must be >= 2, got {grid}")
    T = _tridiag(grid, -1.0, 2.0, -1.0)
    I = sp.identity(grid, format="csr")
    return as_csr(sp.kron(I, T) + sp.kron(T, I))


def convection_diffusion_3d(grid: int,
                            convection: Sequence[float] = DEFAULT_CONVECTION) -> sp.csr_array:
    """Seven-point ``-Laplace + v . grad`` on the unit cube, scaled by ``h**2``.

    Unknowns are ordered with x fastest. The convection term uses centered
    differences, so the neighbour couplings in direction d are
    ``-1 -/+ v_d h / 2`` with ``h = 1 / (grid + 1)``.
    """
    if grid < 2:
        raise ValueError(f"grid must be >= 2, got {grid}")
    v = np.asarray(convection, dtype=np.float64)
    if v.shape != (3,):
        raise ValueError("convection must have three components")
    h = 1.0 / (grid + 1)
    I = sp.identity(grid, format="csr")
    Tx, Ty, Tz = (_tridiag(grid, -1.0 - c * h / 2, 2.0, -1.0 + c * h / 2) for c in v)
    A = sp.kron(I, sp.kron(I, Tx)) + sp.kron(I, sp.kron(Ty, I)) + sp.kron(Tz, sp.kron(I, I))
    return as_csr(A)


def random_rhs(rows: int, s: int, seed: int, stream: int = 0) -> np.ndarray:
    """``rows x s`` matrix of i.i.d. standard normals.

    `stream` selects an independent substream for the same seed (used to
    draw ``C2`` alongside ``C1``).
    """
    if s < 1:
        raise ValueError(f"s must be >= 1, got {s}")
    seq = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream),))
    return np.random.Generator(np.random.PCG64(seq)).standard_normal((rows, s))


@dataclass
class ProblemInstance:
    """``A X + X B = C1 C2^T``; ``B is None`` marks a Lyapunov instance."""

    A: sp.csr_array
    B: Optional[sp.csr_array]
    C1: np.ndarray
    C2: np.ndarray
    label: str
    seed: int
    eps_tol: float = 1e-8

    @property
    def lyapunov(self) -> bool:
        return self.B is None

    @property
    def B_effective(self) -> sp.csr_array:
        return self.A.T.tocsr() if self.B is None else self.B

    @property
    def shape(self) -> tuple[int, int]:
        return self.A.shape[0], self.B_effective.shape[0]


# example id -> (kind, full grid, desk grid, eps_tol)
EXAMPLES = {
    "ex1": ("lyapunov", 100, 30, 1e-8),
    "ex2": ("sylvester", 20, 8, 1e-8),
    "ex3": ("lyapunov", 100, 30, 1e-6),
    "ex4": ("sylvester", 25, 8, 1e-6),
}


def make_problem(example_id: str, scale: str = "desk", s: int = 3, seed: int = 0,
                 convection: Sequence[float] = DEFAULT_CONVECTION,
                 grid: Optional[int] = None) -> ProblemInstance:
    """Build the instance of one of the benchmark examples.

    ``ex1``/``ex3`` are 2-D Laplacian Lyapunov equations, ``ex2``/``ex4``
    Sylvester equations with ``A = B`` the 3-D convection-diffusion
    operator. `grid` overrides the grid size implied by `scale`.
    """
    if example_id not in EXAMPLES:
        raise KeyError(f"unknown example {example_id!r}; expected one of {sorted(EXAMPLES)}")
    if scale not in ("full", "desk"):
        raise ValueError(f"scale must be 'full' or 'desk', got {scale!r}")
    kind, full, desk, tol = EXAMPLES[example_id]
    g = grid or (full if scale == "full" else desk)
    label = f"{example_id}-{scale}-grid{g}-s{s}-seed{seed}"
    if kind == "lyapunov":
        A = laplacian_2d(g)
        C1 = random_rhs(A.shape[0], s, seed)
        return ProblemInstance(A, None, C1, C1, label, seed, tol)
    A = convection_diffusion_3d(g, convection)
    C1 = random_rhs(A.shape[0], s, seed)
    C2 = random_rhs(A.shape[0], s, seed, stream=1)
    return ProblemInstance(A, A.copy(), C1, C2, label, seed, tol)
