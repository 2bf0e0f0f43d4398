import subprocess
import sys

import numpy as np
import pytest

from krylov_calibration import cli
from krylov_calibration.errors import SkipBudgetExceeded
from krylov_calibration.experiment.matrices import write_matrix_market
from krylov_calibration.experiment.runner import ExperimentReport


def run(argv):
    return cli.main(argv)


def test_calibrate_writes_files(tmp_path, capsys):
    out = tmp_path / "res"
    code = run(["calibrate", "--matrix", "gen:rand-spd:40:1e2", "--solver", "krylov-full",
                "--m", "5,12", "--ntest", "20", "--seed", "1", "--out", str(out)])
    assert code == 0
    names = {p.name for p in out.iterdir()}
    assert {"z_table.csv", "s_table.csv", "verdicts.csv", "convergence.csv",
            "z_hist_m5.csv", "s_hist_m12.csv"} <= names
    text = capsys.readouterr().out
    assert "m=5" in text and "m=12" in text and str(out) in text


def test_calibrate_matrix_market_file(tmp_path):
    rng = np.random.default_rng(0)
    G = rng.standard_normal((30, 30))
    path = tmp_path / "a.mtx"
    write_matrix_market(path, G @ G.T + 30 * np.eye(30))
    code = run(["calibrate", "--matrix", str(path), "--solver", "krylov-approx",
                "--approx-rank", "3", "--m", "4", "--ntest", "10", "--out", str(tmp_path / "o"),
                "--threads", "2"])
    assert code == 0
    assert (tmp_path / "o" / "z_table.csv").read_text().count("\n") == 2


@pytest.mark.parametrize("argv", [
    ["calibrate", "--matrix", "gen:rand-spd:10", "--solver", "magic"],
    ["calibrate", "--matrix", "gen:rand-spd:10", "--solver", "krylov-full", "--m", "a,b"],
    ["calibrate", "--solver", "krylov-full"],
    ["calibrate", "--matrix", "gen:rand-spd:10", "--solver", "krylov-full", "--m", "20"],
    ["calibrate", "--matrix", "missing.mtx", "--solver", "krylov-full"],
    ["calibrate", "--matrix", "gen:rand-spd:10", "--solver", "krylov-full", "--ntest", "0"],
    [],
])
def test_config_errors_exit_2(argv, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert run(argv) == 2


def test_malformed_and_indefinite_files_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.mtx"
    bad.write_text("Hello\n")
    assert run(["calibrate", "--matrix", str(bad), "--solver", "krylov-full"]) == 2
    ind = tmp_path / "ind.mtx"
    write_matrix_market(ind, np.diag([1.0, 2.0, -1.0]))
    assert run(["calibrate", "--matrix", str(ind), "--solver", "krylov-full", "--m", "1",
                "--no-jacobi", "--out", str(tmp_path / "o")]) == 2
    assert "positive definite" in capsys.readouterr().err


def test_help_exits_0(capsys):
    assert run(["--help"]) == 0
    assert "calibrate" in capsys.readouterr().out


def test_skip_budget_exits_3(tmp_path, monkeypatch, capsys):
    def fake(config):
        exc = SkipBudgetExceeded("3 of 10 test problems broke down")
        exc.report = ExperimentReport(config, 5, [], [], [], [], [(1, "BreakdownError: x")],
                                      np.zeros(0), np.zeros(0))
        raise exc
    monkeypatch.setattr(cli, "run_experiment", fake)
    code = run(["calibrate", "--matrix", "gen:rand-spd:10", "--solver", "krylov-full",
                "--m", "2", "--out", str(tmp_path / "o")])
    assert code == 3
    err = capsys.readouterr().err
    assert "3 of 10" in err and "problem 1" in err
    assert not (tmp_path / "o").exists()


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "krylov_calibration", "calibrate", "--matrix",
         "gen:diag-logspace:20", "--solver", "random-directions", "--m", "5", "--ntest", "10",
         "--out", str(tmp_path / "o")], capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "o" / "verdicts.csv").is_file()
