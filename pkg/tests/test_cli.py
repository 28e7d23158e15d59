import csv
import io
import json
import math
import shutil
import subprocess

import pytest

from gapkit import cli
from gapkit.potential import Potential, StepPotential, dump_potential


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def step_file(tmp_path):
    path = tmp_path / "step.json"
    dump_potential(StepPotential(30.0, 1.0), str(path))
    return str(path)


def test_solve_json(capsys, step_file):
    code, out, _ = run(capsys, "solve", "--potential", step_file)
    assert code == 0
    doc = json.loads(out)
    assert doc["schema"] == "gapkit/1" and doc["command"] == "solve"
    assert doc["gamma"] == pytest.approx(doc["lambda2"] - doc["lambda1"])
    assert doc["x_minus"] < doc["x_zero"] < doc["x_plus"]


def test_solve_oracle_agrees(capsys, step_file):
    _, a, _ = run(capsys, "solve", "--potential", step_file)
    _, b, _ = run(capsys, "solve", "--potential", step_file, "--method", "oracle")
    assert json.loads(a)["lambda1"] == pytest.approx(json.loads(b)["lambda1"], rel=1e-4)


def test_solve_csv(capsys, step_file):
    code, out, _ = run(capsys, "solve", "--potential", step_file, "--out", "csv")
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0 and rows[0] == ["x", "u1", "u2", "V"]
    assert float(rows[-1][0]) == pytest.approx(math.pi)


def test_solve_neumann_is_exploratory(capsys, tmp_path):
    path = tmp_path / "zero.json"
    dump_potential(Potential.constant(0.0), str(path))
    code, out, _ = run(capsys, "solve", "--potential", str(path), "--bc", "neumann")
    doc = json.loads(out)
    assert code == 0 and doc["exploratory"]
    assert doc["eigenvalues"] == pytest.approx([0.0, 1.0], abs=1e-8)


def test_step(capsys):
    code, out, _ = run(capsys, "step", "--M", "100", "--xminus", "0.3", "-k", "3")
    doc = json.loads(out)
    assert code == 0 and len(doc["eigenvalues"]) == 3
    assert doc["gamma"] > 0


def test_minimize_step_to_file(capsys, tmp_path):
    target = tmp_path / "opt.json"
    code, out, _ = run(capsys, "minimize", "--M", "100", "--output", str(target))
    assert code == 0 and out == ""
    doc = json.loads(target.read_text())
    assert doc["gamma_star"] == pytest.approx(2.103702548327883, rel=1e-10)


def test_sweep_csv_columns(capsys, monkeypatch):
    monkeypatch.setenv("GAPKIT_THREADS", "2")
    code, out, _ = run(capsys, "sweep", "--M-grid", "log:1,100,3")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and [float(r["M"]) for r in rows] == pytest.approx([1, 10, 100])
    g = [float(r["gamma_star"]) for r in rows]
    assert g[0] > g[1] > g[2]


def test_asymptotics(capsys):
    code, out, _ = run(capsys, "asymptotics", "--M-grid", "1e2,1e4")
    doc = json.loads(out)
    assert code == 0
    assert doc["limit_gap"] == pytest.approx(2.0457485159382958)
    assert doc["all_branches"]["gap_star"] == pytest.approx(2.0, abs=1e-9)
    assert len(doc["table"]) == 2


def test_parse_grid():
    assert cli.parse_grid("lin:0,1,3") == [0.0, 0.5, 1.0]
    assert cli.parse_grid("1,2.5") == [1.0, 2.5]
    with pytest.raises(cli.CliError):
        cli.parse_grid("log:-1,2,3")


@pytest.mark.parametrize(
    "argv,code",
    [
        (["nonsense"], 2),
        (["step", "--M", "10"], 2),
        (["step", "--M", "10", "--xminus", "5"], 4),
        (["step", "--M", "-1", "--xminus", "1"], 4),
        (["solve", "--potential", "/nonexistent/file.json"], 3),
        (["sweep", "--M-grid", "log:a,b,c"], 4),
        (["minimize", "--M", "10", "--class", "single-well", "--n-breakpoints", "2"], 4),
        (["minimize", "--M", "10", "--sign", "-"], 4),
    ],
)
def test_error_codes(capsys, argv, code):
    got, _, err = run(capsys, *argv)
    assert got == code
    doc = json.loads(err)
    assert doc["code"] == code and doc["schema"] == "gapkit/1"


def test_malformed_potential_file(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, _, _ = run(capsys, "solve", "--potential", str(bad))
    assert code == 3


def test_bad_thread_count(capsys, monkeypatch):
    monkeypatch.setenv("GAPKIT_THREADS", "zero")
    code, _, _ = run(capsys, "sweep", "--M-grid", "10")
    assert code == 4


@pytest.mark.slow
def test_verify_is_deterministic_and_strict(capsys):
    code1, out1, _ = run(capsys, "verify", "--seed", "3", "--quick")
    code2, out2, _ = run(capsys, "verify", "--seed", "3", "--quick", "--strict")
    assert code1 == 0 and out1 == out2
    assert code2 == (0 if "FAIL" not in out1 else 7)
    assert out1.strip().splitlines()[-1].startswith("seed=3 passed=")


@pytest.mark.skipif(shutil.which("gapkit") is None, reason="console script not installed")
def test_console_script():
    proc = subprocess.run(["gapkit", "step", "--M", "10", "--xminus", "1"], capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["command"] == "step"
