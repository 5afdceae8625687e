import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from _suite import instance_z
from sinkhorn_mirror import cli
from sinkhorn_mirror.invariants import Outcome
from sinkhorn_mirror.problems import ProblemInstance


@pytest.fixture
def pz(tmp_path):
    path = tmp_path / "pz.json"
    path.write_text(ProblemInstance(instance_z(), {"family": "instance-z"}).to_json())
    return path


def test_gen_quadratic_deterministic(tmp_path):
    argv = "gen --family quadratic --seed 7 --nx 50 --ny 50 --dim 2 --eps 0.1 --out".split()
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert cli.run(argv + [str(a)]) == 0
    assert cli.run(argv + [str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_solve_certify_trace(tmp_path):
    p, t = tmp_path / "p.json", tmp_path / "t.csv"
    cli.run(f"gen --family quadratic --seed 7 --nx 50 --ny 50 --dim 2 --eps 0.1 --out {p}".split())
    code = cli.run(f"solve --in {p} --iters 1000 --tol 1e-10 --trace {t} --certify".split())
    assert code == 0
    rows = list(csv.DictReader(t.open()))
    kl_col = np.array([float(r["kl_rho_nu"]) for r in rows])
    assert np.all(np.diff(kl_col) <= 1e-12)
    assert all(r["gap"] != "" and r["hilbert"] != "" for r in rows)
    assert all(r["bound_general"] != "" for r in rows[1:])
    cert = json.loads((tmp_path / "t.cert.json").read_text())
    assert cert["gap"] <= 1e-10


def test_solve_without_certify_leaves_columns_empty(tmp_path, pz):
    t = tmp_path / "t.csv"
    assert cli.run(f"solve --in {pz} --iters 20 --tol 0 --trace {t}".split()) == 0
    rows = list(csv.DictReader(t.open()))
    assert len(rows) == 21
    assert all(r["primal_rounded"] == r["gap"] == r["bound_exact"] == "" for r in rows)
    assert not (tmp_path / "t.cert.json").exists()


def test_check_instance_z(pz, capsys):
    assert cli.run(["check", "--in", str(pz)]) == 0
    assert capsys.readouterr().out.startswith("ok:")


def test_check_reports_first_failure(pz, capsys, monkeypatch):
    fake = [Outcome("monotone_descent", True, "fine"), Outcome("rate_general", False, "too big")]
    monkeypatch.setattr(cli, "run_invariants", lambda *a, **k: fake)
    assert cli.run(["check", "--in", str(pz)]) == 4
    assert capsys.readouterr().out.strip() == "FAIL rate_general: too big"


def test_bounds_report(tmp_path, pz, capsys):
    t = tmp_path / "t.csv"
    cli.run(f"solve --in {pz} --iters 5 --trace {t} --certify".split())
    capsys.readouterr()
    assert cli.run(["bounds", "--in", str(pz), "--cert", str(tmp_path / "t.cert.json")]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["h_star"] == pytest.approx(0.5 * np.log(1.25), abs=1e-10)
    assert rep["c_exact"] == pytest.approx(rep["c_strong"], abs=1e-9)


def test_solver_divergence_exit(tmp_path, pz):
    t = tmp_path / "t.csv"
    assert cli.run(f"solve --in {pz} --iters 5000 --tol 0 --guard 2 --trace {t}".split()) == 3


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["gen", "--family", "nope", "--out", "x.json"],
        ["solve", "--in", "p.json", "--iters", "0", "--trace", "t.csv"],
        ["gen", "--family", "random", "--nx", "2", "--ny", "2", "--zero-fraction", "0.5", "--out", "OUT"],
    ],
)
def test_usage_errors(argv, tmp_path):
    argv = [str(tmp_path / "x.json") if a == "OUT" else a for a in argv]
    assert cli.run(argv) == 1


def test_io_errors(tmp_path):
    assert cli.run(["check", "--in", str(tmp_path / "missing.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli.run(["solve", "--in", str(bad), "--trace", str(tmp_path / "t.csv")]) == 2


def test_module_entry_point(tmp_path):
    out = tmp_path / "r.json"
    argv = [sys.executable, "-m", "sinkhorn_mirror", "gen", "--family", "random", "--seed", "1",
            "--nx", "4", "--ny", "3", "--out", str(out)]
    proc = subprocess.run(argv, capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert json.loads(out.read_text())["meta"]["family"] == "random"
