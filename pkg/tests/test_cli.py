import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from spectral_lab.cli import EXIT_INPUT, EXIT_NUMERIC, main
from spectral_lab.config import build_config, load_config_file, parse_config_text
from spectral_lab.errors import InputError
from spectral_lab.linalg import read_matrix_csv, write_matrix_csv


@pytest.fixture
def matrix_csv(tmp_path):
    a = np.zeros((20, 2))
    a[0, 0], a[1, 1] = 10.0, 4.0
    path = tmp_path / "a.csv"
    write_matrix_csv(path, a)
    return path


CONFIG = """
# small subspace run
m = 30
d = 3
sigma = 5, 3, 1
k = 1
T = 1e-3
trials = 40
"""


class TestConfigFile:
    def test_parse(self):
        values = parse_config_text(CONFIG)
        assert values["sigma"] == "5, 3, 1"
        cfg = build_config(values)
        assert cfg.spec.sigma == (5.0, 3.0, 1.0)
        assert cfg.T == 1e-3 and cfg.trials == 40

    def test_T_forms(self):
        base = parse_config_text(CONFIG)
        assert build_config({**base, "T": "default"}).T is None
        assert build_config({**base, "T": "1e-4, 1e-3"}).T == (1e-4, 1e-3)

    @pytest.mark.parametrize(
        "text, match",
        [("m 3", "key = value"), ("colour = red", "unknown key")],
    )
    def test_syntax_errors(self, text, match):
        with pytest.raises(InputError, match=match):
            parse_config_text(text)

    def test_missing_and_bad_values(self):
        with pytest.raises(InputError, match="missing"):
            build_config({"m": "3", "d": "2"})
        with pytest.raises(InputError):
            build_config({"m": "three", "d": "2", "k": "1"})

    def test_missing_file(self, tmp_path):
        with pytest.raises(InputError):
            load_config_file(tmp_path / "nope.cfg")


class TestBoundsCommand:
    def test_prints_every_bound(self, capsys, tmp_path):
        code = main(["--output-dir", str(tmp_path), "bounds", "--sigma", "10,2", "--m", "100", "--k", "1", "--T", "1e-4"])
        assert code == 0
        doc = json.loads(capsys.readouterr().out)
        kinds = [b["kind"] for b in doc["bounds"]]
        assert {"davis_kahan", "orourke_vu", "main", "subspace", "covariance", "baseline_dkw", "baseline_ov"} <= set(kinds)
        main_b = next(b for b in doc["bounds"] if b["kind"] == "main")
        assert main_b["sans_constant"] == pytest.approx(0.125 * 1e-2)
        assert set(main_b) >= {"kind", "sans_constant", "explicit_constant", "flags"}
        # required gap 8 * 0.01 * 10 * ln(1024) = 5.5 < 8
        assert doc["assumption"]["satisfied"] is True
        assert json.loads((tmp_path / "bounds.json").read_text()) == doc

    def test_vacuous_serializes_null(self, capsys):
        assert main(["bounds", "--sigma", "2,2", "--m", "4", "--k", "1", "--T", "1"]) == 0
        doc = json.loads(capsys.readouterr().out)
        dk = next(b for b in doc["bounds"] if b["kind"] == "davis_kahan")
        assert dk["sans_constant"] is None and dk["flags"] == ["vacuous"]

    def test_bad_sigma(self, capsys):
        assert main(["bounds", "--sigma", "1,2", "--m", "4", "--k", "1", "--T", "1"]) == EXIT_INPUT
        assert "input error" in capsys.readouterr().err


class TestMechanismCommand:
    @pytest.mark.parametrize("mode", ["subspace", "covariance"])
    def test_writes_json_and_matrix(self, matrix_csv, tmp_path, mode):
        out = tmp_path / "out" / "rel.json"
        code = main(["--seed", "3", "mechanism", "--input", str(matrix_csv), "--k", "1", "--T", "0.01", "--mode", mode, "--output", str(out)])
        assert code == 0
        doc = json.loads(out.read_text())
        assert set(doc) == {"mode", "k", "T", "seed", "sigma_hat", "error_frobenius", "released_csv_path"}
        assert doc["mode"] == mode and doc["seed"] == 3
        released = read_matrix_csv(doc["released_csv_path"])
        assert released.shape == (2, 2)
        np.testing.assert_array_equal(released, released.T)

    def test_degenerate_is_input_error(self, tmp_path):
        path = tmp_path / "tie.csv"
        write_matrix_csv(path, np.eye(3))
        assert main(["mechanism", "--input", str(path), "--k", "1", "--T", "0.1", "--output", str(tmp_path / "x.json")]) == EXIT_INPUT

    def test_missing_input(self, tmp_path):
        assert main(["mechanism", "--input", str(tmp_path / "none.csv"), "--k", "1", "--T", "1", "--output", str(tmp_path / "o.json")]) == EXIT_INPUT


class TestSimulateCommand:
    def test_trajectory_csv(self, matrix_csv, tmp_path):
        code = main([
            "--output-dir", str(tmp_path), "--threads", "2", "simulate", "--input", str(matrix_csv),
            "--T", "0.01", "--dt", "1e-3", "--paths", "3", "--checkpoints", "2",
            "--output", "traj.csv", "--frames", "frames.csv",
        ])
        assert code == 0
        with (tmp_path / "traj.csv").open() as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["path_id", "t", "sigma_1", "sigma_2"]
        assert len(rows) == 1 + 3 * 3
        with (tmp_path / "frames.csv").open() as fh:
            assert len(next(csv.reader(fh))) == 2 + 4

    def test_collision_exit_code(self, tmp_path, capsys):
        path = tmp_path / "close.csv"
        write_matrix_csv(path, np.diag([1.0, 0.999]))
        code = main([
            "simulate", "--input", str(path), "--T", "1", "--dt", "0.5", "--collision-floor", "1e-4",
            "--output", str(tmp_path / "t.csv"),
        ])
        assert code == EXIT_NUMERIC
        assert "collision" in capsys.readouterr().err

    def test_bad_dt(self, matrix_csv, tmp_path):
        assert main(["simulate", "--input", str(matrix_csv), "--T", "0.01", "--dt", "1", "--output", str(tmp_path / "t.csv")]) == EXIT_INPUT


class TestExperimentCommands:
    def test_experiment_with_overrides(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(CONFIG)
        out = tmp_path / "out"
        code = main(["--seed", "4", "--output-dir", str(out), "experiment", "--config", str(cfg), "--trials", "35", "--mode", "covariance", "--k", "3"])
        assert code == 0
        doc = json.loads((out / "experiment.json").read_text())
        (s,) = doc["summaries"]
        assert s["trials"] == 35 and s["seed"] == 4 and s["mode"] == "covariance" and s["k"] == 3

    @pytest.mark.parametrize("flag, expected", [([], 9), (["--seed", "0"], 0)])
    def test_config_seed_precedence(self, tmp_path, flag, expected):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(CONFIG + "seed = 9\ntrials = 30\n")
        assert main([*flag, "--output-dir", str(tmp_path), "experiment", "--config", str(cfg)]) == 0
        (s,) = json.loads((tmp_path / "experiment.json").read_text())["summaries"]
        assert s["seed"] == expected

    def test_experiment_missing_keys(self, tmp_path):
        assert main(["--output-dir", str(tmp_path), "experiment", "--m", "4"]) == EXIT_INPUT

    def test_scaling(self, tmp_path, capsys):
        code = main([
            "--output-dir", str(tmp_path), "scaling", "--param", "m", "--m", "20", "--d", "3",
            "--sigma", "5,3,1", "--k", "1", "--trials", "100", "--sweep", "20,40,80,160",
        ])
        assert code == 0
        assert "m-slope" in capsys.readouterr().out
        doc = json.loads((tmp_path / "scaling.json").read_text())
        assert doc["fit"]["parameter"] == "m"
        assert len(doc["summaries"]) == 4

    def test_scaling_too_few_points(self, tmp_path):
        code = main(["--output-dir", str(tmp_path), "scaling", "--m", "20", "--d", "3", "--sigma", "5,3,1", "--k", "1", "--trials", "100", "--sweep", "20,40"])
        assert code == EXIT_INPUT


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "spectral_lab.cli", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    for cmd in ("bounds", "mechanism", "simulate", "experiment", "scaling"):
        assert cmd in proc.stdout
