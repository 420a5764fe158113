import json

import numpy as np
import pytest

from qpurify import acceptance, cli, qcore
from qpurify.io_utils import sha256_file


def run(args):
    return cli.main(args)


def test_bounds_command(tmp_path):
    assert run(["bounds", "--dim", "3", "--out", str(tmp_path)]) == 0
    rows = (tmp_path / "speedup_bounds_D3.csv").read_text().splitlines()
    header = rows[0].split(",")
    vals = dict(zip(header, rows[1].split(",")))
    assert abs(float(vals["S_lower"]) - 8 / 3) < 1e-12
    assert abs(float(vals["S_upper_qft"]) - 8 / 3) < 1e-12
    manifest = json.loads((tmp_path / "manifest_bounds.json").read_text())
    assert {o["path"] for o in manifest["outputs"]} >= {
        "speedup_bounds_D3.csv", "trajectory_bounds_D3.csv"}


def test_mean_impurity_single_time(tmp_path):
    assert run(["mean-impurity", "--dim", "5", "--t", "2.0",
                "--out", str(tmp_path)]) == 0
    rows = (tmp_path / "mean_impurity_D5.csv").read_text().splitlines()
    header = rows[0].split(",")
    vals = dict(zip(header, rows[1].split(",")))
    # regression anchor; the published -1.46 is a known upstream discrepancy
    assert abs(float(vals["log10_mean_L"]) - (-1.2606032608364035)) < 1e-9
    assert abs(float(vals["qbit_L"]) - 0.03429870439536941) < 1e-12


def test_simulate_deterministic_output(tmp_path):
    args = ["simulate", "--dim", "2", "--protocol", "commuting", "--dt", "1e-3",
            "--t-final", "0.05", "--ensemble", "8", "--seed", "7"]
    assert run(args + ["--out", str(tmp_path / "a")]) == 0
    assert run(args + ["--out", str(tmp_path / "b")]) == 0
    fa = tmp_path / "a" / "ensemble_commuting_D2.csv"
    fb = tmp_path / "b" / "ensemble_commuting_D2.csv"
    assert sha256_file(fa) == sha256_file(fb)


def test_simulate_keep_trajectories(tmp_path):
    assert run(["simulate", "--dim", "3", "--protocol", "commuting",
                "--dt", "1e-3", "--t-final", "0.05", "--ensemble", "4",
                "--seed", "1", "--keep-trajectories", "2",
                "--out", str(tmp_path)]) == 0
    assert (tmp_path / "trajectory_D3_0000.csv").exists()
    assert (tmp_path / "trajectory_D3_0001.csv").exists()
    header = (tmp_path / "trajectory_D3_0000.csv").read_text().splitlines()[0]
    assert header.split(",") == ["t_inv_gamma", "L", "log10_L", "V", "dR"]


def test_distribution_command(tmp_path):
    assert run(["distribution", "--dim", "5", "--t", "2.0",
                "--out", str(tmp_path)]) == 0
    manifest = json.loads((tmp_path / "manifest_distribution.json").read_text())
    stats = manifest["distribution_stats"]
    assert abs(stats["total_mass"] - 1.0) < 1e-4
    assert abs(stats["one_over_D_quantile"] - (-3.1736)) < 0.01


def test_speedup_scaling_command(tmp_path):
    assert run(["speedup", "--dim-range", "3", "4", "--out", str(tmp_path)]) == 0
    manifest = json.loads((tmp_path / "manifest_speedup.json").read_text())
    assert "quadratic_fit_coefficient" in manifest
    rows = (tmp_path / "speedup_scaling_D3-4.csv").read_text().splitlines()
    assert len(rows) == 3


def test_search_command(tmp_path):
    assert run(["search", "--dim", "4", "--restarts", "2", "--seed", "3",
                "--out", str(tmp_path)]) == 0
    dump = json.loads((tmp_path / "search_basis_D4.json").read_text())
    assert abs(dump["S_best"] - 8.0) < 1e-9
    U = np.array(dump["matrix_re"]) + 1j * np.array(dump["matrix_im"])
    assert np.max(np.abs(np.abs(U) - 0.5)) < 1e-10


def test_register_command(tmp_path):
    assert run(["register", "--n-max", "3", "--out", str(tmp_path)]) == 0
    rows = (tmp_path / "register_xmax.csv").read_text().splitlines()
    assert len(rows) == 4
    n2 = rows[2].split(",")
    assert abs(float(n2[2]) - 2.0) < 1e-9


def test_wigner_command(tmp_path):
    assert run(["wigner", "--dim", "4", "--state", "mub:1:1",
                "--resolution", "48", "--out", str(tmp_path)]) == 0
    manifest = json.loads((tmp_path / "manifest_wigner.json").read_text())
    assert abs(manifest["wigner_meta"]["surface_integral"] - 1.0) < 1e-6


def test_gamma_rescales_time_column(tmp_path):
    assert run(["mean-impurity", "--dim", "3", "--t", "1.0", "--gamma", "2.0",
                "--out", str(tmp_path)]) == 0
    rows = (tmp_path / "mean_impurity_D3.csv").read_text().splitlines()
    header = rows[0].split(",")
    assert header[:2] == ["t_inv_gamma", "t_seconds"]
    vals = rows[1].split(",")
    assert abs(float(vals[1]) - 0.5) < 1e-15


def test_toml_config_precedence(tmp_path):
    cfg = tmp_path / "run.toml"
    cfg.write_text('dim = 5\nt = 1.0\n')
    assert run(["mean-impurity", "--config", str(cfg),
                "--out", str(tmp_path / "a")]) == 0
    assert (tmp_path / "a" / "mean_impurity_D5.csv").exists()
    # explicit flag beats the file
    assert run(["mean-impurity", "--config", str(cfg), "--dim", "3",
                "--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "b" / "mean_impurity_D3.csv").exists()


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as exc:
        cli.build_parser().parse_args(["no-such-command"])
    assert exc.value.code == 2


def test_validation_error_exit_code(tmp_path, capsys):
    code = run(["mean-impurity", "--dim", "3", "--gamma", "-1.0",
                "--out", str(tmp_path)])
    assert code == 1
    err = json.loads(capsys.readouterr().err.strip())
    assert "gamma" in err["message"]


def test_verify_report(tmp_path, monkeypatch):
    canned = [
        acceptance.AcceptanceResult("alpha", True, 1.0, "x"),
        acceptance.AcceptanceResult("beta", False, 2.0, "y", known_discrepancy=True),
    ]
    monkeypatch.setattr(acceptance, "run_suite", lambda fast=False: canned)
    code = run(["verify", "--fast", "--out", str(tmp_path)])
    assert code == 0  # known discrepancies do not fail the gate
    report = json.loads((tmp_path / "verify_report.json").read_text())
    assert report["known_discrepancies"] == ["beta"]
    code = run(["verify", "--fast", "--strict", "--out", str(tmp_path)])
    assert code == 1
    canned.append(acceptance.AcceptanceResult("gamma_chk", False, 0.0, "z"))
    code = run(["verify", "--fast", "--out", str(tmp_path)])
    assert code == 1


def test_tampered_mub_fails_named_check(monkeypatch):
    bases = qcore.mub_bases_d4()
    bad = [b.copy() for b in bases]
    bad[1] = bad[1].copy()
    bad[1][0, 0] = 0.51
    monkeypatch.setattr(qcore, "mub_bases_d4", lambda: bad)
    errs = acceptance.mub_weight_errors()
    assert max(errs.values()) > 1e-14
