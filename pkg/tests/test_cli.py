import json

import pytest

from rodlangevin.cli import main

from test_experiment import SMALL


@pytest.fixture
def config(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text(SMALL)
    return path


def test_run_passes_and_is_reproducible(config, tmp_path, capsys):
    assert main(["run", str(config), "--trajectories", "2000", "--out", str(tmp_path / "a"), "--jobs", "1"]) == 0
    assert main(["run", str(config), "--trajectories", "2000", "--out", str(tmp_path / "b"), "--jobs", "2"]) == 0
    for name in ("summary.json", "timeseries.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert "[PASS] msd_slope" in capsys.readouterr().out


def test_oracle_failure_exits_one(config, tmp_path):
    # two rods cannot reproduce the ensemble averages
    assert main(["run", str(config), "--trajectories", "2", "--seed", "3", "--out", str(tmp_path)]) == 1
    assert json.loads((tmp_path / "summary.json").read_text())["pass"] is False


def test_zero_trajectories_exit_zero(config, tmp_path):
    out = tmp_path / "out"
    assert main(["run", str(config), "--trajectories", "0", "--out", str(out)]) == 0
    assert [p.name for p in out.iterdir()] == ["summary.json"]


def test_output_dir_from_environment(config, tmp_path, monkeypatch):
    monkeypatch.setenv("RODLANGEVIN_OUT", str(tmp_path / "env"))
    assert main(["run", str(config), "--trajectories", "0"]) == 0
    assert (tmp_path / "env" / "summary.json").exists()


def test_usage_and_config_errors_exit_two(config, tmp_path, capsys):
    assert main([]) == 2
    assert main(["run"]) == 2
    assert main(["run", str(tmp_path / "missing.ini")]) == 2
    bad = tmp_path / "bad.ini"
    bad.write_text(SMALL.replace("dt = 0.01", "dtt = 0.01"))
    assert main(["run", str(bad)]) == 2
    assert "line" in capsys.readouterr().err
    # quantum regime without a cutoff
    assert main(["run", str(config), "--mode", "quantum", "--out", str(tmp_path)]) == 2
    assert main(["kernel-table", str(config), "--tau-max", "1", "--points", "5"]) == 2


def test_kernel_table_command(tmp_path, capsys):
    path = tmp_path / "q.ini"
    path.write_text("[BathParams]\ntemperature = 0.0\ncutoff = 5.0\nregime = quantum\n")
    assert main(["kernel-table", str(path), "--tau-max", "2", "--points", "5", "--symmetric"]) == 0
    rows = capsys.readouterr().out.splitlines()
    assert rows[0] == "tau,C" and len(rows) == 6
    first, last = (float(r.split(",")[1]) for r in (rows[1], rows[-1]))
    assert first == last
    out = tmp_path / "k.csv"
    assert main(["kernel-table", str(path), "--tau-max", "2", "--points", "3", "--out", str(out)]) == 0
    assert out.read_text().count("\n") == 5


def test_selftest_subset(capsys):
    assert main(["selftest", "--criteria", "5"]) == 0
    out = capsys.readouterr().out
    assert "criterion 5 [PASS] force_par_variance" in out and "selftest PASS" in out
