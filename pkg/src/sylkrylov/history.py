"""Solver configuration, convergence histories and per-category timers."""

from __future__ import annotations

import csv
import math
import sys
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Optional

# BiCGSTAB pivots <a, b> are treated as zero when |cos(a, b)| is at rounding level
PIVOT_COSINE = sys.float_info.epsilon

CATEGORIES = ("basic_ops", "krylov_process", "truncation")
CSV_COLUMNS = ("iteration", "rel_residual", "cumulative_time_s",
               "basic_ops_s", "krylov_process_s", "truncation_s")


@dataclass
class SolverConfig:
    """Stopping and breakdown parameters shared by every iterative solver.

    ``max_iter=None`` resolves to ``10 * ceil(sqrt(n*m))`` capped at 10000.
    """

    eps_tol: float = 1e-8
    max_iter: Optional[int] = None
    breakdown_tol: float = 1e-12
    reorthogonalize: bool = False

    def __post_init__(self):
        if not self.eps_tol > 0:
            raise ValueError(f"eps_tol must be positive, got {self.eps_tol}")
        if self.max_iter is not None and self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")

    def resolve_max_iter(self, n: int, m: int) -> int:
        if self.max_iter is not None:
            return int(self.max_iter)
        return min(10 * math.ceil(math.sqrt(n * m)), 10000)


@dataclass
class IterationRecord:
    iteration: int
    rel_residual: float
    basic_ops: float = 0.0
    krylov_process: float = 0.0
    truncation: float = 0.0

    @property
    def elapsed(self) -> float:
        return self.basic_ops + self.krylov_process + self.truncation


@dataclass
class ConvergenceHistory:
    records: list[IterationRecord] = field(default_factory=list)

    def append(self, iteration: int, rel_residual: float, times: dict[str, float]) -> None:
        if rel_residual < 0 or math.isnan(rel_residual):
            raise ValueError(f"invalid residual {rel_residual}")
        self.records.append(IterationRecord(iteration, float(rel_residual), **times))

    def __len__(self) -> int:
        return len(self.records)

    @property
    def iterations(self) -> int:
        return self.records[-1].iteration if self.records else 0

    @property
    def residuals(self) -> list[float]:
        return [r.rel_residual for r in self.records]

    @property
    def final_residual(self) -> float:
        return self.records[-1].rel_residual

    def category_totals(self) -> dict[str, float]:
        return {c: sum(getattr(r, c) for r in self.records) for c in CATEGORIES}

    @property
    def total_time(self) -> float:
        return sum(self.category_totals().values())

    def rows(self):
        cumulative = 0.0
        for r in self.records:
            cumulative += r.elapsed
            yield (r.iteration, r.rel_residual, cumulative,
                   r.basic_ops, r.krylov_process, r.truncation)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for row in self.rows():
                writer.writerow([row[0]] + [repr(float(v)) for v in row[1:]])


class CategoryTimer:
    """Accumulates monotonic-clock time per category between laps."""

    def __init__(self):
        self._acc = dict.fromkeys(CATEGORIES, 0.0)

    @contextmanager
    def __call__(self, category: str):
        if category not in self._acc:
            raise KeyError(category)
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self._acc[category] += time.perf_counter() - t0

    def lap(self) -> dict[str, float]:
        out = self._acc
        self._acc = dict.fromkeys(CATEGORIES, 0.0)
        return out
