"""Benchmark harness: run several solvers on one example and collect
iteration counts, per-category timings and independently recomputed
residuals."""

from __future__ import annotations

import json
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .factorized import factorized_bicgstab, factorized_cg, factorized_cg_lyapunov
from .history import CATEGORIES, ConvergenceHistory, SolverConfig
from .problems import EXAMPLES, DEFAULT_CONVECTION, ProblemInstance, make_problem
from .reference import (
    matrix_oriented_bicgstab,
    matrix_oriented_cg,
    truncated_bicgstab,
    truncated_cg,
)
from .residual import true_residual

log = logging.getLogger(__name__)

CG_METHODS = ("mo-cg", "f-cg", "t-cg")
BICGSTAB_METHODS = ("mo-bicgstab", "f-bicgstab", "t-bicgstab")
METHODS = CG_METHODS + BICGSTAB_METHODS
DEFAULT_EPS_TRUNC = (1e-8, 1e-10, 1e-12)
DEFAULT_METHODS = {
    "ex1": ("mo-cg", "f-cg"),
    "ex2": ("mo-bicgstab", "f-bicgstab"),
    "ex3": ("f-cg", "t-cg"),
    "ex4": ("f-bicgstab", "t-bicgstab"),
}


@dataclass
class MethodRecord:
    method: str
    label: str
    eps_trunc: Optional[float]
    status: str
    message: str
    iterations: int
    total_time: float
    times: dict
    true_residual: Optional[float]
    rank: Optional[list]
    history: Optional[ConvergenceHistory] = field(default=None, repr=False)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("history")
        return d


@dataclass
class BenchReport:
    example_id: str
    scale: str
    label: str
    shape: list
    s: int
    seed: int
    eps_tol: float
    records: list = field(default_factory=list)

    def record(self, label: str) -> MethodRecord:
        for r in self.records:
            if r.label == label:
                return r
        raise KeyError(label)

    def to_dict(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if k != "records"}
        d["records"] = [r.to_dict() for r in self.records]
        return d

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)

    def write_histories(self, directory) -> list[str]:
        paths = []
        for r in self.records:
            if r.history is None:
                continue
            path = os.path.join(directory, f"history_{_slug(r.label)}.csv")
            r.history.to_csv(path)
            paths.append(path)
        return paths


def _slug(label: str) -> str:
    return "".join(c if c.isalnum() or c in "-_." else "_" for c in label).strip("_")


def method_family(method: str) -> str:
    if method in CG_METHODS:
        return "cg"
    if method in BICGSTAB_METHODS:
        return "bicgstab"
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")


def solve_instance(problem: ProblemInstance, method: str, cfg: SolverConfig,
                   eps_trunc: Optional[float] = None):
    """Dispatch one method on `problem`; returns the solver's result object."""
    A, B, C1, C2 = problem.A, problem.B_effective, problem.C1, problem.C2
    method_family(method)
    if method == "f-cg":
        if problem.lyapunov:
            return factorized_cg_lyapunov(A, C1, cfg)
        return factorized_cg(A, B, C1, C2, cfg)
    if method == "f-bicgstab":
        return factorized_bicgstab(A, B, C1, C2, cfg)
    if method == "mo-cg":
        return matrix_oriented_cg(A, B, C1 @ C2.T, cfg)
    if method == "mo-bicgstab":
        return matrix_oriented_bicgstab(A, B, C1 @ C2.T, cfg)
    eps = DEFAULT_EPS_TRUNC[-1] if eps_trunc is None else eps_trunc
    if method == "t-cg":
        if not problem.lyapunov:
            raise ValueError("t-cg solves Lyapunov equations only")
        return truncated_cg(A, C1, cfg, eps_trunc=eps)
    return truncated_bicgstab(A, B, C1, C2, cfg, eps_trunc=eps)


def solution_of(result):
    """The object :func:`true_residual` understands, for any result type."""
    return getattr(result, "X", result)


def solution_rank(result) -> Optional[list]:
    sol = solution_of(result)
    if isinstance(sol, np.ndarray):
        if sol.size > 1_000_000:
            return None
        r = int(np.linalg.matrix_rank(sol))
        return [r, r]
    if hasattr(sol, "core"):
        return list(sol.core.shape)
    return [sol.rank, sol.rank]


def _run_one(problem, method, cfg, eps_trunc):
    label = method if eps_trunc is None else f"{method}[eps={eps_trunc:.0e}]"
    t0 = time.perf_counter()
    try:
        result = solve_instance(problem, method, cfg, eps_trunc)
    except Exception as exc:  # noqa: BLE001 - recorded, remaining methods still run
        log.warning("%s failed on %s: %s", label, problem.label, exc)
        return MethodRecord(method, label, eps_trunc, "error", f"{type(exc).__name__}: {exc}",
                            0, time.perf_counter() - t0, dict.fromkeys(CATEGORIES, 0.0),
                            None, None)
    total = time.perf_counter() - t0
    res = true_residual(problem.A, problem.B_effective, problem.C1, problem.C2,
                        solution_of(result))
    return MethodRecord(method, label, eps_trunc, result.status, result.message,
                        result.iterations, total, result.history.category_totals(),
                        res, solution_rank(result), result.history)


def run_benchmark(example_id: str, scale: str = "desk", methods: Optional[Sequence[str]] = None,
                  s: int = 3, seed: int = 0, eps_trunc: Sequence[float] = DEFAULT_EPS_TRUNC,
                  eps_tol: Optional[float] = None, max_iter: Optional[int] = None,
                  convection: Sequence[float] = DEFAULT_CONVECTION,
                  grid: Optional[int] = None, parallel: bool = False) -> BenchReport:
    """Run `methods` on one of the examples ``ex1``-``ex4``.

    Truncated methods are run once per value in `eps_trunc`. Solver
    exceptions are recorded in the report instead of aborting the run.
    Residuals in the report are recomputed from the returned solutions.
    """
    if example_id not in EXAMPLES:
        raise KeyError(f"unknown example {example_id!r}")
    methods = tuple(methods or DEFAULT_METHODS[example_id])
    family = "cg" if EXAMPLES[example_id][0] == "lyapunov" else "bicgstab"
    for m in methods:
        if method_family(m) != family:
            raise ValueError(f"method {m!r} does not apply to {example_id} ({family} family)")
    problem = make_problem(example_id, scale, s=s, seed=seed, convection=convection, grid=grid)
    cfg = SolverConfig(eps_tol=eps_tol or problem.eps_tol, max_iter=max_iter)

    jobs = []
    for m in methods:
        if m.startswith("t-"):
            jobs.extend((m, e) for e in eps_trunc)
        else:
            jobs.append((m, None))

    if parallel:
        with ThreadPoolExecutor(max_workers=len(jobs)) as pool:
            records = list(pool.map(lambda j: _run_one(problem, j[0], cfg, j[1]), jobs))
    else:
        records = [_run_one(problem, m, cfg, e) for m, e in jobs]

    return BenchReport(example_id, scale, problem.label, list(problem.shape), s, seed,
                       cfg.eps_tol, records)
