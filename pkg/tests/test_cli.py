"""Command-line interface: subcommands, exit codes, config files."""

import math

import pytest

from sparsedae.cli import main

VDP = """\
[params]
mu = 2.0

[odes]
x' = mu * (1 - y^2) * x - y
y' = x

[init]
x = 0.0
y = 2.0
"""


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_solve_builtin_to_stdout(capsys):
    code, out, err = run(capsys, "solve", "ex1", "--tf", "1.0",
                         "--atol", "1e-8", "--stdout")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "t,y,z"
    last_data = lines[-2].split(",")
    assert float(last_data[0]) == 1.0
    assert float(last_data[1]) == pytest.approx(math.sin(1.0), abs=1e-6)
    assert "number of failed steps" in err


def test_solve_writes_csv_file(capsys, tmp_path):
    out_path = tmp_path / "traj.csv"
    code, _, _ = run(capsys, "solve", "ex3", "--tf", "1.0",
                     "--atol", "1e-8", "--out", str(out_path))
    assert code == 0
    text = out_path.read_text()
    assert text.startswith("t,y,z\n")
    assert "# accepted=" in text


def test_solve_problem_file_and_observable(capsys, tmp_path):
    prob = tmp_path / "vdp.prob"
    prob.write_text(VDP)
    code, out, _ = run(capsys, "solve", str(prob), "--tf", "0.5",
                       "--atol", "1e-7", "--stdout")
    assert code == 0
    assert out.startswith("t,x,y\n")


def test_solve_observable_flag(capsys):
    code, out, _ = run(capsys, "solve", "ex4", "--N", "4", "--tf", "0.2",
                       "--atol", "1e-6", "--hinit", "1e-5",
                       "--stdout", "--observable", "c_x0")
    assert code == 0
    assert "# observable c_x0 at t=" in out


def test_config_file_with_flag_override(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("tf = 1.0\natol = 1e-8\nmethod = imptrap\n# comment\n")
    code, out, _ = run(capsys, "solve", "ex1", "--config", str(cfg),
                       "--atol", "1e-4", "--stdout")
    assert code == 0
    # the looser flag atol wins over the config's 1e-8: far fewer rows
    assert len(out.splitlines()) < 60


def test_exit_code_1_on_bad_input(capsys):
    assert run(capsys, "solve", "no_such_problem", "--tf", "1.0")[0] == 1
    assert run(capsys, "solve", "ex1")[0] == 1            # missing --tf
    assert run(capsys, "solve", "ex1", "--tf", "-1")[0] == 1
    assert run(capsys, "converge", "ex1", "--tf", "1.0",
               "--n-list", "4,8")[0] == 1                 # not a PDE problem
    assert run(capsys, "orders", "ex2", "--tf", "1.0",
               "--h-list", "0.1")[0] == 1                 # no oracle


def test_exit_code_2_on_early_stop(capsys, tmp_path):
    code, _, err = run(capsys, "solve", "ex2", "--tf", "2.0", "--atol", "1e-8",
                       "--ntot", "5", "--out", str(tmp_path / "p.csv"))
    assert code == 2
    assert "TooManySteps" in err


def test_converge_table(capsys):
    code, out, _ = run(capsys, "converge", "ex4", "--tf", "0.2",
                       "--atol", "1e-6", "--hinit", "1e-5",
                       "--n-list", "4,8", "--observable", "c_x0", "--stdout")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "N,c_x0"
    assert lines[1].startswith("4,") and lines[2].startswith("8,")
    assert lines[3].startswith("# monotone=")


def test_orders_reports_slopes(capsys):
    code, out, _ = run(capsys, "orders", "decay", "--tf", "1.0",
                       "--method", "eb", "--h-list", "0.1,0.05,0.025",
                       "--stdout")
    assert code == 0
    slopes = [l for l in out.splitlines() if l.startswith("# slope")]
    assert len(slopes) == 2  # raw and extrapolated
    raw = float(slopes[0].split("=")[1])
    extr = float(slopes[1].split("=")[1])
    assert raw == pytest.approx(1.0, abs=0.15)
    assert extr == pytest.approx(2.0, abs=0.2)


def test_pattern_matrix_market(capsys):
    code, out, _ = run(capsys, "pattern", "ex1", "--method", "eb")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "%%MatrixMarket matrix coordinate pattern general"
    assert lines[1] == "2 2 4"
    assert len(lines) == 6
