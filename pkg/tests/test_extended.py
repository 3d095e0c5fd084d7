"""Full-scale runs of the benchmark examples (minutes; opt-in)."""

import pytest

from sylkrylov.factorized import factorized_bicgstab, factorized_cg_lyapunov
from sylkrylov.history import SolverConfig
from sylkrylov.problems import make_problem
from sylkrylov.reference import truncated_bicgstab, truncated_cg
from sylkrylov.residual import true_residual

pytestmark = pytest.mark.extended


@pytest.fixture(scope="module")
def ex3():
    return make_problem("ex3", "full", s=3, seed=0)


@pytest.fixture(scope="module")
def ex4():
    return make_problem("ex4", "full", s=3, seed=0)


def test_ex3_factorized_cg_count(ex3):
    sol = factorized_cg_lyapunov(ex3.A, ex3.C1, SolverConfig(eps_tol=ex3.eps_tol))
    assert sol.status == "converged"
    assert abs(sol.iterations - 268) <= 10
    assert true_residual(ex3.A, None, ex3.C1, None, sol) <= 10 * ex3.eps_tol


def test_ex3_truncated_cg_matches_factorized(ex3):
    cfg = SolverConfig(eps_tol=ex3.eps_tol)
    f = factorized_cg_lyapunov(ex3.A, ex3.C1, cfg)
    t = truncated_cg(ex3.A, ex3.C1, cfg, eps_trunc=1e-12)
    assert t.status == "converged"
    assert abs(t.iterations - 268) <= 10
    assert t.iterations == f.iterations


def test_ex4_factorized_bicgstab_count(ex4):
    sol = factorized_bicgstab(ex4.A, ex4.B, ex4.C1, ex4.C2, SolverConfig(eps_tol=ex4.eps_tol))
    assert sol.status == "converged"
    assert true_residual(ex4.A, ex4.B, ex4.C1, ex4.C2, sol) <= 10 * ex4.eps_tol
    assert 90 <= sol.iterations <= 160, f"{sol.iterations} iterations"


def test_ex4_truncated_bicgstab_count(ex4):
    res = truncated_bicgstab(ex4.A, ex4.B, ex4.C1, ex4.C2, SolverConfig(eps_tol=ex4.eps_tol),
                             eps_trunc=1e-8)
    assert res.status == "converged"
    assert 90 <= res.iterations <= 170, f"{res.iterations} iterations"
