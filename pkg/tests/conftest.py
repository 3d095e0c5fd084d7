import os

import numpy as np
import pytest
import scipy.sparse as sp

EXTENDED_ENV = "SYLKRYLOV_EXTENDED"


def pytest_addoption(parser):
    parser.addoption("--run-extended", action="store_true", default=False,
                     help="run full-scale tests (several minutes)")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--run-extended") or os.environ.get(EXTENDED_ENV) == "1":
        return
    skip = pytest.mark.skip(reason=f"full-scale; use --run-extended or {EXTENDED_ENV}=1")
    for item in items:
        if "extended" in item.keywords:
            item.add_marker(skip)


def random_spd(n, rng, density=0.3, shift=1.0):
    M = sp.random(n, n, density=density, random_state=rng, format="csr")
    M = M + M.T
    lam_min = np.linalg.eigvalsh(M.toarray())[0]
    return sp.csr_array(M + (shift - min(lam_min, 0.0)) * sp.identity(n))


def random_dominant(n, rng, density=0.3):
    """Nonsymmetric with positive, strictly dominant diagonal."""
    M = sp.random(n, n, density=density, random_state=rng, format="csr")
    M = sp.csr_array(M - M.T * 0.5)
    d = np.abs(M.toarray()).sum(axis=1) + 1.0
    return sp.csr_array(M + sp.diags_array(d))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


# -- acceptance verdicts -------------------------------------------------------

_VERDICTS: list[str] = []


@pytest.fixture
def verdict():
    """Record and print one PASS/FAIL line, then assert on it."""

    def record(label: str, ok: bool, detail: str = "") -> None:
        line = f"{'PASS' if ok else 'FAIL'}  {label}" + (f"  ({detail})" if detail else "")
        _VERDICTS.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in _VERDICTS:
            terminalreporter.write_line(line)
