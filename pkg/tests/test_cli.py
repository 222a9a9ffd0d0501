import csv
import json
import shutil
import subprocess
import sys

import numpy as np
import pytest

from weakpde.cli import EXIT_CONFIG, EXIT_IO, EXIT_NUMERICAL, EXIT_OK, main, parse_values
from weakpde.config import ConfigError
from weakpde.field import Field2D, read_field, write_field

SIM = ["--n-x", "256", "--T", "25", "--transient", "20", "--seed", "1"]
ANALYSIS = ["--stride-x", "1", "--stride-t", "1", "--F-t", "20", "--domains", "60"]


@pytest.fixture(scope="module")
def sim_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "ks.fld"
    assert main(["simulate", "-o", str(path), *SIM]) == EXIT_OK
    return path


class TestSimulate:
    def test_output(self, sim_file, capsys):
        data = read_field(sim_file)
        assert data.shape == (257, 101)
        assert data.delta_t == 0.25
        manifest = json.loads(open(f"{sim_file}.manifest.json").read())
        assert manifest["command"] == "simulate"
        assert manifest["config"]["simulation"]["n_x"] == 256
        assert manifest["seed"] == 1
        assert set(manifest["artifacts"]) == {str(sim_file)}
        assert {"version", "timings", "argv"} <= set(manifest)

    def test_deterministic(self, sim_file, tmp_path):
        other = tmp_path / "again.fld"
        assert main(["simulate", "-o", str(other), *SIM]) == EXIT_OK
        assert other.read_bytes() == sim_file.read_bytes()

    def test_missing_directory(self, tmp_path, capsys):
        assert main(["simulate", "-o", str(tmp_path / "no" / "x.fld"), *SIM]) == EXIT_IO
        assert "does not exist" in capsys.readouterr().err

    def test_bad_length(self, tmp_path, capsys):
        assert main(["simulate", "-o", str(tmp_path / "x.fld"), "--L-x", "tau"]) == EXIT_CONFIG
        assert "simulation.L_x" in capsys.readouterr().err

    def test_blow_up(self, tmp_path, capsys):
        # c4(x) < 0 on part of the domain makes the equation ill-posed
        rc = main(["simulate", "-o", str(tmp_path / "x.fld"), "--n-x", "256", "--T", "50",
                   "--transient", "0", "--c4-sine-amplitude", "3"])
        assert rc == EXIT_NUMERICAL
        assert "non-finite" in capsys.readouterr().err


class TestIdentify:
    def test_recovers_ks(self, sim_file, tmp_path, capsys):
        out = tmp_path / "model.json"
        assert main(["identify", str(sim_file), "-o", str(out), *ANALYSIS]) == EXIT_OK
        assert capsys.readouterr().out.startswith("u_t + 1.000 u u_x + 1.000 u_xx + 1.000 u_xxxx")
        report = json.loads(out.read_text())
        assert report["active"] == ["u_t", "u u_x", "u_xx", "u_xxxx"]
        for label in ("u u_x", "u_xx", "u_xxxx"):
            assert report["coefficients"][label] == pytest.approx(1.0, abs=1e-4)
        assert len(report["elimination_trace"]) == 7
        assert report["n_rows"] == 240
        assert report["grid"]["n_t"] == 101
        assert (tmp_path / "model.json.manifest.json").exists()

    def test_precondition_is_config_error(self, sim_file, tmp_path, capsys):
        rc = main(["identify", str(sim_file), "-o", str(tmp_path / "m.json"), *ANALYSIS, "--alpha", "1"])
        assert rc == EXIT_CONFIG
        assert "alpha=1" in capsys.readouterr().err

    def test_truncated_file(self, sim_file, tmp_path, capsys):
        bad = tmp_path / "bad.fld"
        bad.write_bytes(sim_file.read_bytes()[:-8])
        assert main(["identify", str(bad)]) == EXIT_IO
        err = capsys.readouterr().err
        assert "offset" in err and str(bad.stat().st_size) in err

    def test_non_finite_field(self, tmp_path):
        path = tmp_path / "nan.fld"
        values = np.zeros((64, 64))
        values[3, 3] = np.nan
        write_field(Field2D(values, 0.1, 0.1), path)
        assert main(["identify", str(path), "--stride-x", "1", "--stride-t", "1"]) == EXIT_NUMERICAL

    def test_no_field(self, capsys):
        assert main(["identify"]) == EXIT_CONFIG

    def test_config_file(self, sim_file, tmp_path):
        cfg = tmp_path / "c.yaml"
        cfg.write_text(f"data:\n  field: {sim_file}\n  stride_x: 1\n  stride_t: 1\n"
                       "domains:\n  F_t: 20\n  count: 60\n")
        out = tmp_path / "m.json"
        assert main(["identify", "--config", str(cfg), "-o", str(out)]) == EXIT_OK
        assert json.loads(out.read_text())["n_rows"] == 240


class TestSweep:
    def test_unknown_axis(self, tmp_path, capsys):
        assert main(["sweep", "--axis", "nope", "--values", "1,2", "-o", str(tmp_path / "s.csv")]) == EXIT_CONFIG
        assert "valid axes" in capsys.readouterr().err

    def test_csv_and_replay(self, sim_file, tmp_path):
        out = tmp_path / "s.csv"
        argv = ["sweep", "--field", str(sim_file), "--axis", "gamma", "--values", "1.2,2",
                "-o", str(out), "--trials", "3", "--sigma", "0.01", "--threads", "2", *ANALYSIS]
        assert main(argv) == EXIT_OK
        with open(out) as fh:
            rows = list(csv.reader(fh))
        assert rows[0][:3] == ["value", "term", "mean_delta_c"]
        assert len(rows) == 1 + 2 * 3
        again = tmp_path / "again.csv"
        assert main(["replay", f"{out}.manifest.json", "-o", str(again)]) == EXIT_OK
        assert again.read_bytes() == out.read_bytes()

    @pytest.mark.parametrize("text,axis,expected", [
        ("0.1,0.2", "sigma", [0.1, 0.2]),
        ("1:3:3", "stride", [1, 2, 3]),
        ("1:2", "gamma", list(np.linspace(1, 2, 10))),
        ("pi", "F_x", [np.pi]),
    ])
    def test_values(self, text, axis, expected):
        assert parse_values(text, axis) == pytest.approx(expected)

    @pytest.mark.parametrize("text,axis", [("1.5", "stride"), ("1:2:0", "gamma"), ("", "gamma"), ("1:2:3:4", "K")])
    def test_bad_values(self, text, axis):
        with pytest.raises(ConfigError):
            parse_values(text, axis)


class TestSpectrum:
    def test_single_mode(self, tmp_path):
        x = np.linspace(0, 10, 201)
        path = tmp_path / "sine.fld"
        write_field(Field2D(np.repeat(np.sin(2 * np.pi * 0.5 * x)[:, None], 8, axis=1), 0.05, 1.0), path)
        out = tmp_path / "spec.csv"
        assert main(["spectrum", str(path), "-o", str(out)]) == EXIT_OK
        table = np.loadtxt(out, delimiter=",", skiprows=1)
        k = np.argmax(table[:, 1])
        assert table[k, 0] == pytest.approx(2 * np.pi * 0.5)
        others = np.delete(table[:, 1], k)
        assert others.max() < 1e-3 * table[k, 1]

    def test_windowed(self, sim_file, tmp_path, capsys):
        out = tmp_path / "spec.csv"
        rc = main(["spectrum", str(sim_file), "-o", str(out), "--windowed", "--F-t", "20", "--domains", "50"])
        assert rc == EXIT_OK
        assert "peak frequency" in capsys.readouterr().out


def test_replay_bad_manifest(tmp_path):
    bad = tmp_path / "m.json"
    bad.write_text("{not json")
    assert main(["replay", str(bad)]) == EXIT_CONFIG
    bad.write_text("{}")
    assert main(["replay", str(bad)]) == EXIT_CONFIG


def test_usage_error():
    assert main(["frobnicate"]) == EXIT_CONFIG


@pytest.mark.skipif(shutil.which("weakpde") is None, reason="console script not installed")
def test_console_script(tmp_path):
    proc = subprocess.run(["weakpde", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0
    proc = subprocess.run([sys.executable, "-m", "weakpde.cli", "sweep", "--axis", "x", "--values", "1",
                           "-o", str(tmp_path / "s.csv")], capture_output=True, text=True)
    assert proc.returncode == EXIT_CONFIG
