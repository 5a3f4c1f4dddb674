"""Command-line driver: runs, overrides, manifests, comparisons."""

import csv
import json

import pytest

from pilotlab.cli import EXIT_CONFIG, EXIT_FAILED, EXIT_OK, OUTPUT_ROOT_ENV, main

FAST_SLIT = ["--set", "n=300", "--set", "dt=0.02"]


def run_cli(*argv):
    return main(list(argv))


@pytest.fixture(scope="module")
def slit_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("runs") / "ds"
    code = run_cli("run", "double-slit", *FAST_SLIT, "--seed", "1", "--out", str(out))
    assert code == EXIT_OK
    return out


class TestRun:
    def test_artifacts_written(self, slit_run):
        for name in ("trajectories.csv", "screen.csv", "summary.json", "manifest.json"):
            assert (slit_run / name).is_file()

    def test_output_paths_printed(self, tmp_path, capsys):
        out = tmp_path / "ds"
        assert run_cli("run", "three-box", "--out", str(out)) == EXIT_OK
        printed = capsys.readouterr().out
        assert "weak_values.csv" in printed

    def test_manifest_records_overrides(self, slit_run):
        doc = json.loads((slit_run / "manifest.json").read_text())
        assert doc["experiment"] == "double-slit"
        assert doc["config"]["n"] == 300
        assert doc["config"]["seed"] == 1

    def test_unknown_key_is_config_error(self, tmp_path, capsys):
        code = run_cli("run", "double-slit", "--set", "bogus=1", "--out", str(tmp_path / "x"))
        assert code == EXIT_CONFIG
        assert "bogus" in capsys.readouterr().err

    def test_malformed_set_is_config_error(self, tmp_path):
        code = run_cli("run", "double-slit", "--set", "n100", "--out", str(tmp_path / "x"))
        assert code == EXIT_CONFIG

    def test_missing_experiment_is_config_error(self):
        assert run_cli("run") == EXIT_CONFIG

    def test_toml_config_file(self, tmp_path):
        cfg = tmp_path / "cfg.toml"
        cfg.write_text("n = 200\nseed = 9\nmode = \"spin-only\"\n")
        out = tmp_path / "sr"
        assert run_cli("run", "surreal", "--config", str(cfg), "--out", str(out)) == EXIT_OK
        doc = json.loads((out / "manifest.json").read_text())
        assert doc["config"]["n"] == 200 and doc["config"]["seed"] == 9

    def test_output_root_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv(OUTPUT_ROOT_ENV, str(tmp_path / "root"))
        assert run_cli("run", "three-box") == EXIT_OK
        assert (tmp_path / "root" / "three-box" / "weak_values.csv").is_file()

    def test_three_box_values(self, tmp_path):
        out = tmp_path / "tb"
        assert run_cli("run", "three-box", "--out", str(out)) == EXIT_OK
        with open(out / "weak_values.csv") as fh:
            rows = {r[0]: r for r in csv.reader(fh)}
        assert float(rows["P_A"][1]) == 1.0
        assert float(rows["P_B"][1]) == 1.0
        assert float(rows["P_C"][1]) == -1.0

    def test_rerun_from_manifest_is_byte_identical(self, slit_run, tmp_path):
        out2 = tmp_path / "replay"
        code = run_cli("run", "--from-manifest", str(slit_run / "manifest.json"), "--out", str(out2))
        assert code == EXIT_OK
        for name in ("trajectories.csv", "screen.csv", "summary.json", "manifest.json"):
            assert (out2 / name).read_bytes() == (slit_run / name).read_bytes()


class TestCompare:
    def test_same_law_indistinguishable(self, slit_run, tmp_path, capsys):
        other = tmp_path / "ds2"
        assert run_cli("run", "double-slit", *FAST_SLIT, "--seed", "2", "--out", str(other)) == EXIT_OK
        report_path = tmp_path / "cmp.json"
        code = run_cli("compare", str(slit_run), str(other), "--out", str(report_path))
        assert code == EXIT_OK
        doc = json.loads(report_path.read_text())
        assert doc["verdict"] in ("indistinguishable", "distinguishable")
        assert "verdict" in capsys.readouterr().out

    def test_different_experiments_rejected(self, slit_run, tmp_path, capsys):
        sr = tmp_path / "sr"
        assert run_cli("run", "surreal", "--set", "n=100", "--out", str(sr)) == EXIT_OK
        assert run_cli("compare", str(slit_run), str(sr)) == EXIT_FAILED
        assert "compare" in capsys.readouterr().err

    def test_missing_directory_fails(self, slit_run, tmp_path):
        assert run_cli("compare", str(slit_run), str(tmp_path / "nope")) == EXIT_FAILED
