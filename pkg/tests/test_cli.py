import csv
import json
import shutil
import subprocess

import numpy as np
import pytest
import scipy.sparse as sp

from sylkrylov.cli import main
from sylkrylov.mmio import read_matrix_market, write_matrix_market
from sylkrylov.problems import convection_diffusion_3d, laplacian_2d
from sylkrylov.reference import kron_solve

from conftest import random_dominant


@pytest.fixture
def identity_problem(tmp_path, rng):
    write_matrix_market(sp.identity(4, format="csr"), tmp_path / "A.mtx")
    write_matrix_market(rng.standard_normal((4, 2)), tmp_path / "C1.mtx")
    return tmp_path


def solve(tmp, *extra):
    return main(["solve", "--A", str(tmp / "A.mtx"), "--C1", str(tmp / "C1.mtx"), *extra])


def test_identity_solve_reports_one_iteration(identity_problem):
    out = identity_problem / "sol"
    assert solve(identity_problem, "--method", "f-cg", "--out", str(out)) == 0
    meta = json.loads((out / "meta.json").read_text())
    assert meta["iterations"] == 1 and meta["status"] == "converged"
    assert meta["format"] == "factored"
    for f in ("V.mtx", "core.mtx", "W.mtx", "history.csv"):
        assert (out / f).is_file()
    assert set(meta["inputs"]) == {"A", "C1"}
    assert len(meta["inputs"]["A"]["sha256"]) == 64


def test_check_pass_and_corrupted_core(identity_problem, capsys):
    tmp = identity_problem
    out = tmp / "sol"
    solve(tmp, "--method", "f-cg", "--tol", "1e-10", "--out", str(out))
    capsys.readouterr()
    args = ["check", str(out), "--A", str(tmp / "A.mtx"), "--C1", str(tmp / "C1.mtx")]
    assert main(args) == 0
    assert float(capsys.readouterr().out) <= 1e-14
    core = read_matrix_market(out / "core.mtx")
    write_matrix_market(np.zeros_like(core), out / "core.mtx")
    assert main(args) == 4
    assert float(capsys.readouterr().out) == pytest.approx(1.0)


def test_missing_c1_no_output(tmp_path, capsys):
    write_matrix_market(sp.identity(4, format="csr"), tmp_path / "A.mtx")
    out = tmp_path / "sol"
    code = main(["solve", "--A", str(tmp_path / "A.mtx"), "--C1", str(tmp_path / "nope.mtx"),
                 "--out", str(out)])
    assert code == 1
    assert not out.exists()
    assert "C1" in capsys.readouterr().err


@pytest.mark.parametrize("method,fmt,files", [
    ("mo-cg", "dense", ["X.mtx"]),
    ("t-cg", "symmetric", ["Z.mtx", "D.mtx"]),
    ("f-bicgstab", "factored", ["V.mtx", "core.mtx", "W.mtx"]),
    ("t-bicgstab", "factored", ["V.mtx", "core.mtx", "W.mtx"]),
    ("mo-bicgstab", "dense", ["X.mtx"]),
])
def test_output_formats_round_trip(tmp_path, rng, method, fmt, files):
    write_matrix_market(laplacian_2d(6), tmp_path / "A.mtx")
    write_matrix_market(rng.standard_normal((36, 2)), tmp_path / "C1.mtx")
    out = tmp_path / "o"
    assert solve(tmp_path, "--method", method, "--out", str(out)) == 0
    meta = json.loads((out / "meta.json").read_text())
    assert meta["format"] == fmt
    assert all((out / f).is_file() for f in files)
    assert main(["check", str(out), "--A", str(tmp_path / "A.mtx"),
                 "--C1", str(tmp_path / "C1.mtx")]) == 0


def test_ex3_desk_manifest(tmp_path):
    write_matrix_market(laplacian_2d(30), tmp_path / "A.mtx")
    manifest = {"A": "A.mtx", "rank": 3, "seed": 0, "method": "f-cg", "tol": 1e-6,
                "out": "run"}
    (tmp_path / "m.json").write_text(json.dumps(manifest))
    assert main(["solve", "--manifest", str(tmp_path / "m.json")]) == 0
    with open(tmp_path / "run" / "history.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert float(rows[-1]["rel_residual"]) <= 1e-6
    meta = json.loads((tmp_path / "run" / "meta.json").read_text())
    assert meta["rhs"]["generated"] and meta["seed"] == 0
    # the generated right-hand side is stored, so check needs no C1
    assert main(["check", str(tmp_path / "run"), "--A", str(tmp_path / "A.mtx")]) == 0


def test_serial_rerun_bit_identical(tmp_path):
    write_matrix_market(convection_diffusion_3d(5), tmp_path / "A.mtx")
    args = ["solve", "--A", str(tmp_path / "A.mtx"), "--B", str(tmp_path / "A.mtx"),
            "--rank", "2", "--seed", "4", "--method", "f-bicgstab"]
    assert main(args + ["--out", str(tmp_path / "r1")]) == 0
    assert main(args + ["--out", str(tmp_path / "r2")]) == 0
    for f in ("V.mtx", "core.mtx", "W.mtx", "C1.mtx", "C2.mtx"):
        assert (tmp_path / "r1" / f).read_bytes() == (tmp_path / "r2" / f).read_bytes()


def test_kron_dense_solution_checks(tmp_path, rng, capsys):
    A, B = random_dominant(10, rng), random_dominant(7, rng)
    C1, C2 = rng.standard_normal((10, 2)), rng.standard_normal((7, 2))
    for name, M in (("A", A), ("B", B), ("C1", C1), ("C2", C2)):
        write_matrix_market(M, tmp_path / f"{name}.mtx")
    sol = tmp_path / "sol"
    sol.mkdir()
    write_matrix_market(kron_solve(A, B, C1, C2), sol / "X.mtx")
    (sol / "meta.json").write_text(json.dumps({"format": "dense", "tol": 1e-10,
                                               "lyapunov": False}))
    code = main(["check", str(sol), *[x for n in ("A", "B", "C1", "C2")
                                      for x in (f"--{n}", str(tmp_path / f"{n}.mtx"))]])
    assert code == 0
    assert float(capsys.readouterr().out) <= 1e-10


def test_exit_codes_for_solver_status(tmp_path, rng):
    write_matrix_market(laplacian_2d(8), tmp_path / "A.mtx")
    write_matrix_market(rng.standard_normal((64, 2)), tmp_path / "C1.mtx")
    assert solve(tmp_path, "--method", "f-cg", "--max-iter", "2", "--out",
                 str(tmp_path / "o")) == 2
    assert json.loads((tmp_path / "o" / "meta.json").read_text())["status"] == "max_iter"


def test_breakdown_exit_code(tmp_path, rng):
    # indefinite symmetric operator: the CG pivot <R, Q> vanishes at the first step
    A = sp.diags_array([1.0, -1.0], format="csr")
    write_matrix_market(A, tmp_path / "A.mtx")
    write_matrix_market(np.array([[1.0], [0.0]]), tmp_path / "C1.mtx")
    write_matrix_market(np.array([[0.0], [1.0]]), tmp_path / "C2.mtx")
    code = main(["solve", "--A", str(tmp_path / "A.mtx"), "--B", str(tmp_path / "A.mtx"),
                 "--C1", str(tmp_path / "C1.mtx"), "--C2", str(tmp_path / "C2.mtx"),
                 "--method", "f-cg", "--out", str(tmp_path / "o")])
    assert code == 3


@pytest.mark.parametrize("argv", [
    ["--method", "f-cg"],                            # nonsymmetric A with a CG method
    ["--method", "t-cg", "--B", "{A}"],              # t-cg is Lyapunov only
    ["--method", "f-bicgstab", "--C2", "{C1}"],      # C2 without B
])
def test_input_errors(tmp_path, rng, argv):
    write_matrix_market(random_dominant(6, rng), tmp_path / "A.mtx")
    write_matrix_market(rng.standard_normal((6, 1)), tmp_path / "C1.mtx")
    argv = [a.format(A=tmp_path / "A.mtx", C1=tmp_path / "C1.mtx") for a in argv]
    assert solve(tmp_path, *argv, "--out", str(tmp_path / "o")) == 1
    assert not (tmp_path / "o").exists()


def test_check_missing_files(identity_problem):
    tmp = identity_problem
    out = tmp / "sol"
    solve(tmp, "--out", str(out))
    (out / "W.mtx").unlink()
    assert main(["check", str(out), "--A", str(tmp / "A.mtx"), "--C1", str(tmp / "C1.mtx")]) == 1
    assert main(["check", str(tmp / "nowhere"), "--A", str(tmp / "A.mtx")]) == 1


def test_check_mismatched_problem(identity_problem, rng):
    tmp = identity_problem
    solve(tmp, "--out", str(tmp / "sol"))
    write_matrix_market(sp.identity(5, format="csr"), tmp / "A5.mtx")
    assert main(["check", str(tmp / "sol"), "--A", str(tmp / "A5.mtx"),
                 "--C1", str(tmp / "C1.mtx")]) == 1


def test_bench_ex1_histories(tmp_path):
    assert main(["bench", "ex1", "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert [r["method"] for r in report["records"]] == ["mo-cg", "f-cg"]
    counts = []
    for name in ("history_mo-cg.csv", "history_f-cg.csv"):
        with open(tmp_path / name) as fh:
            counts.append(sum(1 for _ in fh))
    assert abs(counts[0] - counts[1]) <= 2


def test_bench_ex3_all_cg_methods(tmp_path):
    code = main(["bench", "ex3", "--method", "mo-cg", "--method", "f-cg",
                 "--method", "t-cg", "--eps-trunc", "1e-12", "--out", str(tmp_path)])
    assert code == 0
    its = {r["iterations"] for r in json.loads((tmp_path / "report.json").read_text())["records"]}
    assert len(its) == 1


def test_bench_unknown_example(tmp_path):
    assert main(["bench", "ex9", "--out", str(tmp_path / "b")]) == 1
    assert not (tmp_path / "b").exists()


def test_parallel_env(identity_problem, monkeypatch):
    monkeypatch.setenv("SYLKRYLOV_THREADS", "2")
    assert solve(identity_problem, "--parallel", "--out", str(identity_problem / "p")) == 0
    monkeypatch.setenv("SYLKRYLOV_THREADS", "many")
    assert solve(identity_problem, "--parallel", "--out", str(identity_problem / "q")) == 1


@pytest.mark.skipif(shutil.which("sylkrylov") is None, reason="console script not installed")
def test_console_script(identity_problem):
    tmp = identity_problem
    r = subprocess.run(["sylkrylov", "solve", "--A", str(tmp / "A.mtx"), "--C1",
                        str(tmp / "C1.mtx"), "--out", str(tmp / "s")],
                       capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    r = subprocess.run(["sylkrylov", "check", str(tmp / "s"), "--A", str(tmp / "A.mtx"),
                        "--C1", str(tmp / "C1.mtx")], capture_output=True, text=True)
    assert r.returncode == 0 and float(r.stdout) <= 1e-14
