"""End-to-end runs of the JSON-configured command line."""

import json
import math
import subprocess
import sys

import numpy as np
import pytest

from dicke_squeeze import cli


def write_config(path, payload):
    path.write_text(json.dumps(payload, indent=1))
    return str(path)


def base_params(**extra):
    p = {"omega_b_hz": 1.0e9, "g_hz": 1.0e3, "N": 20,
         "omega_r_hz": 8.0e5, "scheme_override": "TAT_yz"}
    p.update(extra)
    return p


def read_summary(out):
    return json.loads((out / "summary.json").read_text())


def test_evolve_writes_artifacts_deterministically(tmp_path):
    cfg = {
        "schema": "run.v1",
        "params": base_params(),
        "t_grid_s": {"stop": 2.0e-3, "num": 40},
        "schemes": ["OAT", "TAT_yz"],
    }
    cfg_path = write_config(tmp_path / "run.json", cfg)
    out1 = tmp_path / "o1"
    out2 = tmp_path / "o2"
    assert cli.main(["evolve", "--config", cfg_path, "--out", str(out1)]) == 0
    assert cli.main(["evolve", "--config", cfg_path, "--out", str(out2)]) == 0
    data1 = (out1 / "trajectories.csv").read_bytes()
    assert data1 == (out2 / "trajectories.csv").read_bytes()
    summary = read_summary(out1)
    assert summary["command"] == "evolve"
    assert set(summary["minima"]) == {"OAT", "TAT_yz"}

    table = np.genfromtxt(out1 / "trajectories.csv", delimiter=",", names=True)
    assert table.shape == (40,)
    assert table["xi2_OAT"][0] == pytest.approx(1.0, abs=1e-9)


def test_evolve_json_format(tmp_path):
    cfg = {
        "schema": "run.v1",
        "params": base_params(N=12),
        "t_grid_s": {"stop": 1.0e-3, "num": 12},
    }
    out = tmp_path / "o"
    assert cli.main(["evolve", "--config",
                     write_config(tmp_path / "r.json", cfg),
                     "--out", str(out), "--format", "json"]) == 0
    doc = json.loads((out / "trajectories.json").read_text())
    assert len(doc["columns"]["t"]) == 12


def test_bad_schema_exits_config(tmp_path, capsys):
    cfg_path = write_config(tmp_path / "bad.json",
                            {"schema": "run.v2", "params": base_params()})
    assert cli.main(["bound", "--config", cfg_path, "--out", str(tmp_path)]) == 2
    assert "config error" in capsys.readouterr().err


def test_unknown_param_key_exits_config(tmp_path):
    cfg_path = write_config(
        tmp_path / "bad.json",
        {"schema": "run.v1", "params": base_params(coupling_hz=1.0)})
    assert cli.main(["bound", "--config", cfg_path, "--out", str(tmp_path)]) == 2


def test_missing_config_file_exits_config(tmp_path):
    assert cli.main(["bound", "--config", str(tmp_path / "nope.json"),
                     "--out", str(tmp_path)]) == 2


def test_unstable_sideband_exits_config(tmp_path):
    # Gamma >= omega_b / 4 has no bounded squeezed frame
    cfg_path = write_config(
        tmp_path / "unstable.json",
        {"schema": "run.v1",
         "params": {"omega_b_hz": 1.0e9, "g_hz": 1.0e3, "N": 10,
                    "gamma_knob_hz": 5.0e8}})
    assert cli.main(["bound", "--config", cfg_path, "--out", str(tmp_path)]) == 2


def test_numerical_error_exit_code(tmp_path, monkeypatch):
    cfg_path = write_config(
        tmp_path / "ok.json",
        {"schema": "run.v1", "params": base_params(),
         "t_grid_s": {"stop": 1e-4, "num": 5}})

    def boom(cfg, raw, out, fmt):
        raise cli.IntegratorError("synthetic blow-up")

    monkeypatch.setitem(cli._COMMANDS, "evolve", boom)
    assert cli.main(["evolve", "--config", cfg_path,
                     "--out", str(tmp_path)]) == 3


def test_bound_summary_reports_chain(tmp_path):
    cfg = {"schema": "run.v1",
           "params": base_params(Q_m=1.0e6, T2_s=0.01, n_th=20.0,
                                 omega_r_hz=5.3e4, N=100)}
    out = tmp_path / "o"
    assert cli.main(["bound", "--config",
                     write_config(tmp_path / "r.json", cfg),
                     "--out", str(out)]) == 0
    summary = read_summary(out)
    assert summary["xi2_lb"] == pytest.approx(0.495135, rel=1e-4)
    assert summary["chain"]["scheme"] == "TAT_yz"
    assert summary["chain"]["eps"] == pytest.approx(0.70724, rel=1e-3)


def test_moments_summary_has_analytic_optimum(tmp_path):
    cfg = {"schema": "run.v1",
           "params": base_params(Q_m=1.0e6, T2_s=0.01, n_th=1.0,
                                 omega_r_hz=8.0e4, N=1000),
           "t_grid_s": {"stop": 6.0e-5, "num": 60}}
    out = tmp_path / "o"
    assert cli.main(["moments", "--config",
                     write_config(tmp_path / "r.json", cfg),
                     "--out", str(out)]) == 0
    summary = read_summary(out)
    opt = summary["analytic_optimum"]
    assert opt["t_min"] == pytest.approx(2.69772e-5, rel=1e-4)
    assert opt["xi2_min"] == pytest.approx(2.35647e-2, rel=1e-4)
    # the integrated moment system has its own, shallower minimum
    assert summary["grid_minimum"]["t_min"] == pytest.approx(5.33681e-5, rel=1e-3)
    assert summary["grid_minimum"]["xi2_min"] == pytest.approx(3.24805e-2, rel=1e-3)


def test_scan_n_fit_summary(tmp_path):
    cfg = {"schema": "run.v1",
           "params": base_params(Q_m=1.0e6, T2_s=0.01, n_th=1.0,
                                 omega_r_hz=8.0e4, N=50),
           "N_grid": [50, 80, 130, 210, 340],
           "solver": "cumulant",
           "fit_const": True}
    out = tmp_path / "o"
    assert cli.main(["scan-n", "--config",
                     write_config(tmp_path / "r.json", cfg),
                     "--out", str(out)]) == 0
    summary = read_summary(out)
    assert summary["fit"]["b"] < 0.0
    table = np.genfromtxt(out / "scan_n.csv", delimiter=",", names=True)
    assert table.shape == (5,)
    assert np.all(np.diff(table["xi2_min"]) < 0)


def test_scan_n_requires_grid(tmp_path):
    cfg = {"schema": "run.v1", "params": base_params()}
    assert cli.main(["scan-n", "--config",
                     write_config(tmp_path / "r.json", cfg),
                     "--out", str(tmp_path)]) == 2


def test_optimize_single_n_cumulant(tmp_path):
    cfg = {"schema": "run.v1",
           "params": base_params(Q_m=1.0e6, T2_s=0.01, n_th=1.0,
                                 omega_r_hz=8.0e5, N=500),
           "omega_r_bracket_hz": [3.0e4, 3.0e6],
           "solver": "cumulant"}
    out = tmp_path / "o"
    assert cli.main(["optimize", "--config",
                     write_config(tmp_path / "r.json", cfg),
                     "--out", str(out)]) == 0
    summary = read_summary(out)
    assert summary["flat_profile"] is False
    lo, hi = 2.0 * math.pi * 3.0e4, 2.0 * math.pi * 3.0e6
    assert lo <= summary["omega_r_opt"] <= hi
    assert summary["omega_r_opt_hz"] == pytest.approx(
        summary["omega_r_opt"] / (2.0 * math.pi), rel=1e-12)
    assert 0.0 < summary["xi2_opt"] < 1.0


def test_husimi_field_normalization(tmp_path):
    cfg = {"schema": "run.v1",
           "params": base_params(N=24),
           "t_grid_s": {"stop": 2.0e-3, "num": 8},
           "husimi": {"n_theta": 32, "n_phi": 64}}
    out = tmp_path / "o"
    assert cli.main(["husimi", "--config",
                     write_config(tmp_path / "r.json", cfg),
                     "--out", str(out)]) == 0
    summary = read_summary(out)
    assert summary["j"] == 12.0
    assert summary["integral_estimate"] == pytest.approx(1.0, abs=1e-6)
    table = np.genfromtxt(out / "husimi.csv", delimiter=",", names=True)
    assert table.shape == (32 * 64,)
    assert table["Q"].min() > -1e-12


def test_verify_reduction_run(tmp_path):
    cfg = {"schema": "run.v1",
           "params": {"omega_b_hz": 1.0, "g_hz": 0.02, "N": 2,
                      "delta_hz": -3.0, "G_hz": 0.1},
           "verify": {"n_a": 6, "n_b": 10}}
    out = tmp_path / "o"
    assert cli.main(["verify", "--config",
                     write_config(tmp_path / "r.json", cfg),
                     "--out", str(out)]) == 0
    summary = read_summary(out)
    assert summary["regime_ok"] is True
    assert summary["max_rel_deviation_to_min"] < 0.1
    table = np.genfromtxt(out / "verify_trace.csv", delimiter=",", names=True)
    assert {"t", "xi2_full", "xi2_eff"} <= set(table.dtype.names)


def test_console_script_entry_point(tmp_path):
    cfg = {"schema": "run.v1",
           "params": base_params(Q_m=1.0e6, T2_s=0.01, n_th=20.0,
                                 omega_r_hz=5.3e4, N=100)}
    cfg_path = write_config(tmp_path / "r.json", cfg)
    proc = subprocess.run(
        [sys.executable, "-m", "dicke_squeeze.cli", "bound",
         "--config", cfg_path, "--out", str(tmp_path / "o")],
        capture_output=True, text=True)
    assert proc.returncode == 0
    assert (tmp_path / "o" / "summary.json").exists()
