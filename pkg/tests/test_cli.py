"""Command-line entry point."""

import numpy as np
import pytest

from spardec.cli import main
from spardec.problem import Dictionary, SparseProblem, save_problem
from property_checks import random_problem


def run_cli(args):
    return main(args)


def test_single_run_writes_results(tmp_path, capsys):
    code = run_cli(["run", "--experiment", "single", "--seed", "3",
                    "--out", str(tmp_path / "res")])
    out = capsys.readouterr()
    assert code == 0
    written = [line for line in out.out.splitlines() if line.endswith(".csv")
               or line.endswith(".dat")]
    assert written, out.out
    assert (tmp_path / "res" / "single_results.csv").exists()
    # the comparison table went to stdout too
    assert "algorithm" in out.out


def test_exp2_scaled_run(tmp_path, capsys):
    code = run_cli(["run", "--experiment", "exp2", "--scale", "0.1",
                    "--trials", "8", "--seed", "1",
                    "--out", str(tmp_path / "e2")])
    assert code == 0
    assert (tmp_path / "e2" / "exp2_temporal.csv").exists()


def test_missing_command():
    assert run_cli([]) == 1


def test_config_error_exit_code(tmp_path):
    assert run_cli(["run", "--experiment", "single",
                    "--algorithms", "omp",
                    "--out", str(tmp_path)]) == 1
    assert run_cli(["run", "--experiment", "single",
                    "--scale", "2.0",
                    "--out", str(tmp_path)]) == 1
    assert run_cli(["run", "--experiment", "single",
                    "--schedule", "0.1,0.5",
                    "--out", str(tmp_path)]) == 1


def test_io_error_exit_code(tmp_path):
    missing = tmp_path / "missing.sdp"
    assert run_cli(["run", "--experiment", "single",
                    "--problem", str(missing),
                    "--out", str(tmp_path / "out")]) == 3
    garbage = tmp_path / "garbage.sdp"
    garbage.write_text("not a problem file\n")
    assert run_cli(["run", "--experiment", "single",
                    "--problem", str(garbage),
                    "--out", str(tmp_path / "out")]) == 3


def test_solver_error_exit_code(tmp_path):
    # rank-1 dictionary (every column the same basis vector) defeats the
    # frame inversion; the run must fail cleanly with the solver code
    entries = np.zeros((4, 10))
    entries[0] = 1.0
    prob = SparseProblem(dictionary=Dictionary(entries),
                         mixture=np.array([1.0, 0.0, 0.0, 0.0]),
                         truth=None, seed=0)
    path = tmp_path / "rank1.sdp"
    save_problem(str(path), prob)
    assert run_cli(["run", "--experiment", "single",
                    "--problem", str(path),
                    "--out", str(tmp_path / "out")]) == 2


def test_problem_file_round_trip(tmp_path, capsys):
    prob = random_problem(8, 20, seed=9)
    path = tmp_path / "case.sdp"
    save_problem(str(path), prob)
    code = run_cli(["run", "--experiment", "single",
                    "--problem", str(path),
                    "--algorithms", "ide_s,lp",
                    "--out", str(tmp_path / "out")])
    out = capsys.readouterr().out
    assert code == 0
    assert "ide_s" in out and "lp" in out and "mof" not in out


def test_schedule_flag_values(tmp_path):
    code = run_cli(["run", "--experiment", "single", "--seed", "2",
                    "--schedule", "0.3,0.1,0.02",
                    "--algorithms", "ide_s",
                    "--out", str(tmp_path / "sch")])
    assert code == 0
    text = (tmp_path / "sch" / "single_results.csv").read_text()
    assert "custom_3" in text or "0.3" in text or "ide_s" in text
