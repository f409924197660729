import json
import os

import pytest

from asympolaron import io
from asympolaron.cli import (EXIT_CONFIG, EXIT_OK, EXIT_VALIDATION, MANIFEST, ConfigError,
                             coupling_list, main, resolve_config)
from asympolaron.model import gc

FAST = ["--starts", "2", "--n-g", "4", "--g-min", "0.6", "--g-max", "1.2"]


class TestConfig:
    def test_defaults(self):
        cfg = resolve_config("scan", None, {})
        assert cfg["omega"] == 0.15 and cfg["parity"] == -1 and cfg["mode"] == "asymmetric"
        assert cfg["n_g"] == 19

    def test_precedence(self):
        cfg = resolve_config("scan", {"omega": 0.3, "n_g": 5}, {"omega": 0.4})
        assert cfg["omega"] == 0.4 and cfg["n_g"] == 5

    def test_coupling_units(self):
        cfg = resolve_config("scan", {"g": [0.5, 1.0], "omega": 0.5}, {})
        assert coupling_list(cfg) == pytest.approx([0.5 * gc(0.5), gc(0.5)])
        cfg = resolve_config("scan", {"g": "0.1,0.2", "g_units": "abs"}, {})
        assert coupling_list(cfg) == [0.1, 0.2]

    @pytest.mark.parametrize("file_cfg", [
        {"bogus": 1}, {"omega": -1.0}, {"parity": "sideways"}, {"mode": "lopsided"},
        {"g": [1.0, 0.5]}, {"n_g": 0}, {"kappa": 1.5}, {"g_units": "meters"}, {"omega": "abc"},
    ])
    def test_rejected(self, file_cfg):
        with pytest.raises(ConfigError):
            resolve_config("scan", file_cfg, {})

    def test_qfi_needs_three_points(self):
        with pytest.raises(ConfigError):
            resolve_config("qfi", {"n_g": 2}, {})


class TestExitCodes:
    def test_config_error(self, tmp_path):
        assert main(["scan", "--omega", "-1", "--out", str(tmp_path)]) == EXIT_CONFIG

    def test_bad_config_file(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text("[1, 2]")
        assert main(["scan", "--config", str(path), "--out", str(tmp_path)]) == EXIT_CONFIG

    def test_validation_failure(self, tmp_path):
        out = tmp_path / "run"
        assert main(["ed-sweep", "--n-g", "2", "--out", str(out)]) == EXIT_OK
        m = json.loads((out / MANIFEST).read_text())
        m["outputs"]["ed_sweep.csv"] = "0" * 64
        (out / MANIFEST).write_text(json.dumps(m))
        assert main(["rerun", str(out / MANIFEST), "--out", str(tmp_path / "again")]) == EXIT_VALIDATION

    def test_missing_manifest(self, tmp_path):
        assert main(["rerun", str(tmp_path / "nope.json")]) == EXIT_CONFIG


class TestRuns:
    def test_scan_manifest_and_rerun(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"omega": 0.5, "parity": "excited"}))
        out = tmp_path / "run"
        assert main(["scan", "--config", str(cfg), "--out", str(out)] + FAST) == EXIT_OK
        m = io.load_manifest(out / MANIFEST)
        assert m["config"]["omega"] == 0.5 and m["config"]["parity"] == 1
        assert m["outputs"]["scan.csv"] == io.sha256_file(out / "scan.csv")
        _, cols, rows = io.read_csv(out / "scan.csv")
        assert len(rows) == 4 and cols[-2:] == ["converged", "jump"]
        assert main(["rerun", str(out / MANIFEST)]) == EXIT_OK
        assert "all 1 outputs reproduced" in capsys.readouterr().out
        assert (out / "rerun" / "scan.csv").read_bytes() == (out / "scan.csv").read_bytes()

    def test_workers_do_not_change_output(self, tmp_path):
        args = ["ed-sweep", "--omega", "0.5", "--n-g", "3"]
        assert main(args + ["--out", str(tmp_path / "a")]) == EXIT_OK
        assert main(args + ["--workers", "2", "--out", str(tmp_path / "b")]) == EXIT_OK
        assert (tmp_path / "a" / "ed_sweep.csv").read_bytes() == (tmp_path / "b" / "ed_sweep.csv").read_bytes()

    def test_variational_json(self, tmp_path):
        assert main(["variational", "--omega", "0.5", "--g", "0.8", "--starts", "2",
                     "--out", str(tmp_path)]) == EXIT_OK
        d = json.loads((tmp_path / "variational.json").read_text())
        assert d["converged"]

    def test_qfi_outputs(self, tmp_path):
        assert main(["qfi", "--omega", "0.3", "--n-g", "3", "--g-min", "0.9", "--g-max", "1.1",
                     "--starts", "2", "--with-ed", "false", "--out", str(tmp_path)]) == EXIT_OK
        s = json.loads((tmp_path / "qfi_summary.json").read_text())
        assert s["max_sum_rule_rel"] < 1e-6 and s["max_oracle_rel"] < 1e-4

    def test_validate_command(self, tmp_path, capsys):
        assert main(["validate", "--draws", "10", "--out", str(tmp_path)]) == EXIT_OK
        out = capsys.readouterr().out
        assert "PASS" in out and "FAIL" not in out
        assert os.path.exists(tmp_path / "validate.csv")
