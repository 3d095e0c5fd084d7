"""Command-line front end: ``sylkrylov solve | bench | check``.

Exit codes: 0 converged / check passed, 1 input error, 2 iteration limit
reached, 3 breakdown, 4 verification failed.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from contextlib import contextmanager
from dataclasses import dataclass, fields
from typing import Optional

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__
from .bench import METHODS, run_benchmark, solution_of, solution_rank
from .errors import Breakdown, MatrixMarketError, SylKrylovError
from .factorized import (
    FactorizedSolution,
    factorized_bicgstab,
    factorized_cg,
    factorized_cg_lyapunov,
)
from .history import SolverConfig
from .linalg import as_csr, as_dense, is_structurally_symmetric
from .lowrank import LowRankMatrix, SymmetricLowRankMatrix
from .mmio import read_matrix_market, write_matrix_market
from .problems import EXAMPLES, RNG_NAME, random_rhs
from .reference import (
    matrix_oriented_bicgstab,
    matrix_oriented_cg,
    truncated_bicgstab,
    truncated_cg,
)
from .residual import true_residual

log = logging.getLogger("sylkrylov")

EXIT_OK, EXIT_INPUT, EXIT_MAXITER, EXIT_BREAKDOWN, EXIT_CHECK = 0, 1, 2, 3, 4
STATUS_EXIT = {"converged": EXIT_OK, "max_iter": EXIT_MAXITER, "breakdown": EXIT_BREAKDOWN}
THREADS_ENV = "SYLKRYLOV_THREADS"
CHECK_FACTOR = 10.0


class InputError(Exception):
    """Bad arguments or unreadable inputs (exit code 1)."""


@dataclass
class SolveManifest:
    A: Optional[str] = None
    B: Optional[str] = None
    C1: Optional[str] = None
    C2: Optional[str] = None
    method: str = "f-cg"
    tol: float = 1e-8
    eps_trunc: float = 1e-12
    max_iter: Optional[int] = None
    seed: int = 0
    rank: Optional[int] = None
    out: Optional[str] = None

    @classmethod
    def from_json(cls, path: str) -> "SolveManifest":
        try:
            with open(path) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read manifest {path}: {exc}") from exc
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InputError(f"unknown manifest keys: {sorted(unknown)}")
        # relative paths are taken relative to the manifest
        base = os.path.dirname(os.path.abspath(path))
        for key in ("A", "B", "C1", "C2", "out"):
            if data.get(key) is not None and not os.path.isabs(data[key]):
                data[key] = os.path.join(base, data[key])
        return cls(**data)

    def validate(self) -> None:
        if self.method not in METHODS:
            raise InputError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if self.A is None:
            raise InputError("the operator A is required (--A)")
        if self.C1 is None and self.rank is None:
            raise InputError("give a right-hand side factor (--C1) or --rank to generate one")
        if self.C2 is not None and self.C1 is None:
            raise InputError("--C2 requires --C1")
        if self.out is None:
            raise InputError("an output directory is required (--out)")
        if not self.tol > 0 or not self.eps_trunc > 0:
            raise InputError("--tol and --eps-trunc must be positive")
        if self.max_iter is not None and self.max_iter < 1:
            raise InputError("--max-iter must be >= 1")
        if self.rank is not None and self.rank < 1:
            raise InputError("--rank must be >= 1")


def sha256_file(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _read(path: str, what: str, dense: bool = False):
    if not os.path.isfile(path):
        raise InputError(f"{what}: no such file {path}")
    try:
        M = read_matrix_market(path)
    except (MatrixMarketError, OSError) as exc:
        raise InputError(f"{what}: {exc}") from exc
    if dense:
        return as_dense(M.toarray() if hasattr(M, "toarray") else M)
    return as_csr(M)


@contextmanager
def _threads(parallel: bool):
    """Serial BLAS by default; ``--parallel`` honours ``SYLKRYLOV_THREADS``."""
    if not parallel:
        limit = 1
    else:
        raw = os.environ.get(THREADS_ENV)
        try:
            limit = int(raw) if raw else None
        except ValueError:
            raise InputError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    if limit is None:
        yield
    else:
        with threadpool_limits(limits=limit):
            yield


# -- solve ---------------------------------------------------------------------

def _load_problem(man: SolveManifest):
    A = _read(man.A, "A")
    if A.shape[0] != A.shape[1]:
        raise InputError(f"A must be square, got {A.shape}")
    B = None if man.B is None else _read(man.B, "B")
    if B is not None and B.shape[0] != B.shape[1]:
        raise InputError(f"B must be square, got {B.shape}")
    n = A.shape[0]
    m = n if B is None else B.shape[0]
    generated = man.C1 is None
    if generated:
        C1 = random_rhs(n, man.rank, man.seed)
        C2 = C1 if B is None else random_rhs(m, man.rank, man.seed, stream=1)
    else:
        C1 = _read(man.C1, "C1", dense=True)
        C2 = C1 if man.C2 is None else _read(man.C2, "C2", dense=True)
    if C1.shape[0] != n or C2.shape[0] != m or C1.shape[1] != C2.shape[1]:
        raise InputError(f"C1 {C1.shape} / C2 {C2.shape} do not conform with "
                         f"A ({n}) and B ({m})")
    if B is None and man.C2 is not None:
        raise InputError("Lyapunov mode (no B) takes C2 = C1; do not pass --C2")
    return A, B, C1, C2, generated


def _check_method(man: SolveManifest, A, B) -> None:
    if man.method in ("f-cg", "t-cg", "mo-cg"):
        if not is_structurally_symmetric(A) or (B is not None and not is_structurally_symmetric(B)):
            raise InputError(f"{man.method} requires symmetric A and B")
    if man.method == "t-cg" and B is not None:
        raise InputError("t-cg solves Lyapunov equations only; omit --B")


def _run_solver(man: SolveManifest, A, B, C1, C2):
    cfg = SolverConfig(eps_tol=man.tol, max_iter=man.max_iter)
    Beff = A.T.tocsr() if B is None else B
    m = man.method
    if m == "f-cg":
        if B is None:
            return factorized_cg_lyapunov(A, C1, cfg)
        return factorized_cg(A, B, C1, C2, cfg)
    if m == "f-bicgstab":
        return factorized_bicgstab(A, Beff, C1, C2, cfg)
    if m == "mo-cg":
        return matrix_oriented_cg(A, Beff, C1 @ C2.T, cfg)
    if m == "mo-bicgstab":
        return matrix_oriented_bicgstab(A, Beff, C1 @ C2.T, cfg)
    if m == "t-cg":
        return truncated_cg(A, C1, cfg, eps_trunc=man.eps_trunc)
    return truncated_bicgstab(A, Beff, C1, C2, cfg, eps_trunc=man.eps_trunc)


def _write_solution(sol, out: str) -> tuple[str, list[str]]:
    if isinstance(sol, FactorizedSolution):
        parts = {"V": sol.V, "core": sol.core, "W": sol.W}
        fmt = "factored"
    elif isinstance(sol, LowRankMatrix):
        parts = {"V": sol.U, "core": sol.S, "W": sol.V}
        fmt = "factored"
    elif isinstance(sol, SymmetricLowRankMatrix):
        parts = {"Z": sol.Z, "D": sol.D}
        fmt = "symmetric"
    else:
        parts = {"X": np.asarray(sol)}
        fmt = "dense"
    names = []
    for name, M in parts.items():
        write_matrix_market(M, os.path.join(out, f"{name}.mtx"))
        names.append(f"{name}.mtx")
    return fmt, names


def cmd_solve(man: SolveManifest, parallel: bool = False) -> int:
    man.validate()
    A, B, C1, C2, generated = _load_problem(man)
    _check_method(man, A, B)
    inputs = {k: {"path": os.path.abspath(p), "sha256": sha256_file(p)}
              for k, p in (("A", man.A), ("B", man.B), ("C1", man.C1), ("C2", man.C2))
              if p is not None}

    with _threads(parallel):
        try:
            result = _run_solver(man, A, B, C1, C2)
        except Breakdown as exc:
            print(f"error: breakdown: {exc}", file=sys.stderr)
            return EXIT_BREAKDOWN
        except (SylKrylovError, ValueError, MemoryError) as exc:
            raise InputError(str(exc)) from exc
        sol = solution_of(result)
        res = true_residual(A, B, C1, C2, sol)

    os.makedirs(man.out, exist_ok=True)
    fmt, files = _write_solution(sol, man.out)
    if generated:
        write_matrix_market(C1, os.path.join(man.out, "C1.mtx"))
        files.append("C1.mtx")
        if B is not None:
            write_matrix_market(C2, os.path.join(man.out, "C2.mtx"))
            files.append("C2.mtx")
    result.history.to_csv(os.path.join(man.out, "history.csv"))
    times = result.history.category_totals()
    meta = {
        "version": __version__,
        "method": man.method,
        "format": fmt,
        "lyapunov": B is None,
        "shape": [A.shape[0], (A if B is None else B).shape[0]],
        "status": result.status,
        "message": result.message,
        "iterations": result.iterations,
        "tol": man.tol,
        "eps_trunc": man.eps_trunc if man.method.startswith("t-") else None,
        "max_iter": man.max_iter,
        "seed": man.seed,
        "rhs": ({"generated": True, "rank": man.rank, "rng": RNG_NAME}
                if generated else {"generated": False}),
        "inputs": inputs,
        "final_true_residual": res,
        "final_recursive_residual": result.history.final_residual,
        "rank": solution_rank(result),
        "timings": {**times, "total": sum(times.values())},
        "files": files + ["history.csv"],
    }
    with open(os.path.join(man.out, "meta.json"), "w") as fh:
        json.dump(meta, fh, indent=2)
    print(f"{man.method}: {result.status} after {result.iterations} iterations, "
          f"true residual {res:.6e}")
    return STATUS_EXIT[result.status]


# -- check ---------------------------------------------------------------------

def _load_solution(directory: str, meta: dict):
    fmt = meta.get("format")

    def part(name):
        return _read(os.path.join(directory, f"{name}.mtx"), name, dense=True)

    if fmt == "factored":
        V, core, W = part("V"), part("core"), part("W")
        if V.shape[1] != core.shape[0] or W.shape[1] != core.shape[1]:
            raise InputError(f"factor shapes V {V.shape}, core {core.shape}, W {W.shape} "
                             "do not conform")
        return LowRankMatrix(V, core, W)
    if fmt == "symmetric":
        Z, D = part("Z"), part("D")
        if Z.shape[1] != D.shape[0] or D.shape[0] != D.shape[1]:
            raise InputError(f"factor shapes Z {Z.shape}, D {D.shape} do not conform")
        return SymmetricLowRankMatrix(Z, D)
    if fmt == "dense":
        return part("X")
    raise InputError(f"meta.json has unknown solution format {fmt!r}")


def cmd_check(solution_dir: str, A_path: str, B_path: Optional[str], C1_path: Optional[str],
              C2_path: Optional[str]) -> int:
    meta_path = os.path.join(solution_dir, "meta.json")
    try:
        with open(meta_path) as fh:
            meta = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {meta_path}: {exc}") from exc
    if C1_path is None:
        # solves with a generated right-hand side store it next to the solution
        C1_path = os.path.join(solution_dir, "C1.mtx")
        if C2_path is None and os.path.isfile(os.path.join(solution_dir, "C2.mtx")):
            C2_path = os.path.join(solution_dir, "C2.mtx")
    for key, path in (("A", A_path), ("B", B_path), ("C1", C1_path), ("C2", C2_path)):
        recorded = meta.get("inputs", {}).get(key)
        if path is not None and recorded and os.path.isfile(path):
            if sha256_file(path) != recorded["sha256"]:
                log.warning("%s differs from the file used for the solve", path)
    if B_path is None and not meta.get("lyapunov", True):
        raise InputError("the stored solution is for a Sylvester equation; pass --B")
    A = _read(A_path, "A")
    B = None if B_path is None else _read(B_path, "B")
    C1 = _read(C1_path, "C1", dense=True)
    C2 = None if C2_path is None else _read(C2_path, "C2", dense=True)
    sol = _load_solution(solution_dir, meta)
    try:
        res = true_residual(A, B, C1, C2, sol)
    except (SylKrylovError, ValueError) as exc:
        raise InputError(f"solution does not match the problem: {exc}") from exc
    print(f"{res:.6e}")
    tol = float(meta.get("tol", 0.0))
    return EXIT_OK if res <= CHECK_FACTOR * tol else EXIT_CHECK


# -- bench ---------------------------------------------------------------------

def cmd_bench(example_id: str, scale: str, methods: Optional[list[str]], out: str,
              eps_trunc: Optional[list[float]] = None, s: int = 3, seed: int = 0,
              tol: Optional[float] = None, max_iter: Optional[int] = None,
              parallel: bool = False) -> int:
    if example_id not in EXAMPLES:
        raise InputError(f"unknown example {example_id!r}; expected one of {sorted(EXAMPLES)}")
    kwargs = {} if eps_trunc is None else {"eps_trunc": eps_trunc}
    with _threads(parallel):
        try:
            report = run_benchmark(example_id, scale, methods, s=s, seed=seed, eps_tol=tol,
                                   max_iter=max_iter, parallel=parallel, **kwargs)
        except (ValueError, KeyError) as exc:
            raise InputError(str(exc)) from exc
    os.makedirs(out, exist_ok=True)
    report.to_json(os.path.join(out, "report.json"))
    report.write_histories(out)
    for r in report.records:
        res = "n/a" if r.true_residual is None else f"{r.true_residual:.3e}"
        print(f"{r.label:24s} {r.status:10s} it={r.iterations:5d} "
              f"time={r.total_time:8.3f}s res={res}")
    return EXIT_OK


# -- entry point ---------------------------------------------------------------

def _float_list(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sylkrylov",
                                description="Low-rank Krylov solvers for Sylvester equations.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="solve A X + X B = C1 C2^T from Matrix Market files")
    s.add_argument("--manifest", help="JSON file with solve settings; flags override it")
    s.add_argument("--A")
    s.add_argument("--B", help="omit for the Lyapunov equation A X + X A^T = C1 C1^T")
    s.add_argument("--C1")
    s.add_argument("--C2")
    s.add_argument("--rank", type=int, help="generate random C1 (and C2) with this many columns")
    s.add_argument("--method", choices=METHODS)
    s.add_argument("--tol", type=float)
    s.add_argument("--eps-trunc", type=float, dest="eps_trunc")
    s.add_argument("--max-iter", type=int, dest="max_iter")
    s.add_argument("--seed", type=int)
    s.add_argument("--out")
    s.add_argument("--parallel", action="store_true",
                   help=f"allow multithreaded kernels (capped by ${THREADS_ENV})")

    b = sub.add_parser("bench", help="run solvers on a built-in example")
    b.add_argument("example", help=f"one of {', '.join(sorted(EXAMPLES))}")
    b.add_argument("--scale", choices=("desk", "full"), default="desk")
    b.add_argument("--method", action="append", dest="methods", choices=METHODS,
                   help="repeatable; defaults depend on the example")
    b.add_argument("--eps-trunc", type=_float_list, dest="eps_trunc",
                   help="comma-separated truncation thresholds")
    b.add_argument("--rank", type=int, default=3)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--tol", type=float)
    b.add_argument("--max-iter", type=int, dest="max_iter")
    b.add_argument("--out", required=True)
    b.add_argument("--parallel", action="store_true")

    c = sub.add_parser("check", help="recompute the residual of a stored solution")
    c.add_argument("solution_dir")
    c.add_argument("--A", required=True)
    c.add_argument("--B")
    c.add_argument("--C1")
    c.add_argument("--C2")
    return p


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "solve":
            man = SolveManifest.from_json(args.manifest) if args.manifest else SolveManifest()
            for f in fields(SolveManifest):
                value = getattr(args, f.name, None)
                if value is not None:
                    setattr(man, f.name, value)
            return cmd_solve(man, parallel=args.parallel)
        if args.command == "bench":
            return cmd_bench(args.example, args.scale, args.methods, args.out,
                             eps_trunc=args.eps_trunc, s=args.rank, seed=args.seed,
                             tol=args.tol, max_iter=args.max_iter, parallel=args.parallel)
        return cmd_check(args.solution_dir, args.A, args.B, args.C1, args.C2)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
