from __future__ import annotations

import json
import subprocess
import sys

import numpy as np
import pytest

from vortexlab.cli import DEFAULTS, ConfigError, main, resolve_config


def run_cli(*args: str) -> int:
    return main(list(args))


def test_riemann_trajectory_run(tmp_path, capsys):
    out = tmp_path / "traj"
    assert run_cli("riemann", "--nt", "65", "--N", "2000", "--out", str(out)) == 0
    lines = (out / "trajectory.csv").read_text().splitlines()
    assert lines[0] == "t,Re R,Im R"
    assert len(lines) == 66
    first = [float(v) for v in lines[1].split(",")]
    assert first == [0.0, 0.0, 0.0]
    man = json.loads((out / "manifest.json").read_text())
    assert man["passed"] and man["subcommand"] == "riemann"
    assert man["config"]["nt"] == 65
    assert "PASS" in capsys.readouterr().out


def test_failed_check_exits_one(tmp_path, capsys):
    out = tmp_path / "flat"
    assert run_cli("riemann", "--mode", "flatness", "--flatness-N", "[256, 16]", "--out", str(out)) == 1
    assert "invariant failed: flatness strictly increasing" in capsys.readouterr().err
    assert json.loads((out / "manifest.json").read_text())["passed"] is False


@pytest.mark.parametrize("args", [
    ["riemann", "--no-such-flag", "1"],
    ["riemann", "--nt", "\"many\""],
    ["riemann", "--mode", "spiral"],
    ["nosuch"],
])
def test_configuration_errors_exit_two(args, tmp_path):
    assert run_cli(*args, "--out", str(tmp_path / "x")) == 2


def test_unknown_key_in_config_file(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"nt": 5, "bogus": 1}))
    assert run_cli("riemann", "--config", str(cfg), "--out", str(tmp_path / "o")) == 2


def test_layering_defaults_file_flags():
    cfg = resolve_config("riemann", {"nt": 5, "N": 100}, {"N": 50})
    assert cfg["nt"] == 5 and cfg["N"] == 50
    assert cfg["tmax"] == DEFAULTS["riemann"]["tmax"]
    with pytest.raises(ConfigError):
        resolve_config("riemann", {"unknown": 1}, {})


def test_rerun_from_manifest_is_identical(tmp_path):
    first = tmp_path / "a"
    assert run_cli("riemann", "--nt", "33", "--N", "500", "--out", str(first)) == 0
    second = tmp_path / "b"
    assert run_cli("riemann", "--config", str(first / "manifest.json"), "--out", str(second)) == 0
    assert (first / "trajectory.csv").read_bytes() == (second / "trajectory.csv").read_bytes()


def test_selfsim_single_value(tmp_path):
    out = tmp_path / "s"
    assert run_cli("selfsim", "--a", "0.5", "--calibrate", "false", "--out", str(out)) == 0
    data = json.loads((out / "selfsim.json").read_text())
    assert data["theta"] == pytest.approx(2 * np.arcsin(np.exp(-np.pi * 0.25 / 2)), abs=1e-3)
    rows = np.loadtxt(out / "profile.csv", delimiter=",", skiprows=1)
    assert rows.shape[1] == 7


def test_validate_suite(tmp_path):
    out = tmp_path / "v"
    assert run_cli("validate", "--out", str(out)) == 0
    data = json.loads((out / "validate.json").read_text())
    man = json.loads((out / "manifest.json").read_text())
    assert man["passed"]
    assert {"gauss_sum", "mass_conservation", "frame_integrity"} <= set(man["suites"])
    assert data


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "vortexlab", "riemann", "--nt", "9", "--N", "100", "--out", str(tmp_path / "m")],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert (tmp_path / "m" / "trajectory.csv").exists()
