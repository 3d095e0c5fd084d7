"""Low-rank Krylov solvers for Sylvester and Lyapunov matrix equations.

The factorized solvers keep every iterate as ``V core W^T`` with ``V``, ``W``
orthonormal block Krylov bases, so no truncation is ever needed.
"""

__version__ = "0.1.0"

from .errors import (
    Breakdown,
    DimensionError,
    MatrixMarketError,
    MaxIter,
    RankDeficientStart,
    SingularOperator,
    SylKrylovError,
)
from .factorized import (
    FactorizedSolution,
    factorized_bicgstab,
    factorized_cg,
    factorized_cg_lyapunov,
)
from .history import ConvergenceHistory, SolverConfig
from .krylov import BlockKrylovBasis, basis_init
from .lowrank import LowRankMatrix, SymmetricLowRankMatrix, symmetric_truncate, truncate
from .mmio import read_matrix_market, write_matrix_market
from .problems import ProblemInstance, make_problem
from .reference import (
    kron_solve,
    matrix_oriented_bicgstab,
    matrix_oriented_cg,
    truncated_bicgstab,
    truncated_cg,
)
from .residual import true_residual
from .bench import BenchReport, run_benchmark

__all__ = [
    "BenchReport",
    "BlockKrylovBasis",
    "Breakdown",
    "ConvergenceHistory",
    "DimensionError",
    "FactorizedSolution",
    "LowRankMatrix",
    "MatrixMarketError",
    "MaxIter",
    "ProblemInstance",
    "RankDeficientStart",
    "SingularOperator",
    "SolverConfig",
    "SylKrylovError",
    "SymmetricLowRankMatrix",
    "basis_init",
    "factorized_bicgstab",
    "factorized_cg",
    "factorized_cg_lyapunov",
    "kron_solve",
    "make_problem",
    "matrix_oriented_bicgstab",
    "matrix_oriented_cg",
    "read_matrix_market",
    "run_benchmark",
    "symmetric_truncate",
    "true_residual",
    "truncate",
    "truncated_bicgstab",
    "truncated_cg",
    "write_matrix_market",
]
