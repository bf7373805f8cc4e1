import json
import math

import pytest

from degenwave.cli import (
    EXIT_DOMAIN,
    EXIT_OK,
    EXIT_USAGE,
    build_parser,
    ode_wave_near_speed,
    resolve_config,
    run_cli,
)
from degenwave.shooting import ShootConfig


def test_min_speed_formula(tmp_path, capsys):
    """min-speed prints the closed-form speed and writes a manifest"""
    code = run_cli(["min-speed", "--kappa", "1", "--mbar", "0.25", "--out", str(tmp_path)])
    assert code == EXIT_OK
    assert capsys.readouterr().out.strip() == "1.73205"
    record = json.loads((tmp_path / "manifest.json").read_text(encoding="utf-8"))
    assert record["command"] == "min-speed"
    assert record["results"]["method"] == "formula"
    assert record["params"]["model"]["kappa"] == 1.0
    assert (tmp_path / "degenwave.log").exists()


def test_unknown_flag_is_usage_error(tmp_path):
    """argparse errors exit with 64"""
    assert run_cli(["min-speed", "--speed", "3", "--out", str(tmp_path)]) == EXIT_USAGE
    assert run_cli(["no-such-command"]) == EXIT_USAGE


def test_domain_errors(tmp_path):
    """Out-of-range parameters and missing required values exit with 2"""
    assert run_cli(["min-speed", "--mbar", "1.0", "--out", str(tmp_path)]) == EXIT_DOMAIN
    assert run_cli(["min-speed", "--kappa", "-1", "--out", str(tmp_path)]) == EXIT_DOMAIN
    assert run_cli(["shoot", "--alpha", "1", "--out", str(tmp_path)]) == EXIT_DOMAIN


def test_malformed_config_file(tmp_path):
    """A broken config file is a domain error"""
    path = tmp_path / "bad.json"
    path.write_text('{"model": ', encoding="utf-8")
    assert run_cli(["min-speed", "--config", str(path), "--out", str(tmp_path / "out")]) == EXIT_DOMAIN


def test_flags_override_config(tmp_path):
    """Command-line values win over the config file"""
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"model": {"kappa": 2.0, "m_bar": 0.5}}), encoding="utf-8")
    args = build_parser().parse_args(["min-speed", "--config", str(path), "--kappa", "4"])
    cfg = resolve_config(args)
    assert cfg.model.kappa == 4.0
    assert cfg.model.m_bar == 0.5


def test_shoot_writes_tables(tmp_path, capsys):
    """shoot writes the trajectory, the physical profile and the manifest"""
    code = run_cli(["shoot", "--c", "2", "--kappa", "1", "--alpha", "0.5", "--out", str(tmp_path)])
    assert code == EXIT_OK
    assert capsys.readouterr().out.startswith("ConvergedToMbar")
    assert (tmp_path / "trajectory.csv").read_text(encoding="utf-8").startswith("y,n,p,m\n")
    assert (tmp_path / "profile.csv").read_text(encoding="utf-8").startswith("xi,N,M\n")
    record = json.loads((tmp_path / "manifest.json").read_text(encoding="utf-8"))
    assert record["outputs"] == ["profile.csv", "trajectory.csv"]
    assert record["results"]["kind"] == "ConvergedToMbar"


def test_alpha_scan(tmp_path):
    """alpha-scan writes one row per alpha in input order"""
    code = run_cli(["alpha-scan", "--c", "1", "--kappa", "1", "--alphas", "0.01,3", "--out", str(tmp_path)])
    assert code == EXIT_OK
    lines = (tmp_path / "alpha_scan.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == "alpha,kind,T,n_inf,m_inf"
    assert lines[1].startswith("0.01,ExitedNegativeN,")
    assert lines[2].startswith("3,ConvergedToMbar,")


def test_alpha_scan_range_checks(tmp_path):
    """An empty alpha range is rejected"""
    code = run_cli(["alpha-scan", "--c", "1", "--alpha-min", "2", "--alpha-max", "1", "--out", str(tmp_path)])
    assert code == EXIT_DOMAIN


@pytest.mark.slow
def test_pde_run_small_grid(tmp_path):
    """pde-run tracks the front and keeps the final snapshot"""
    code = run_cli([
        "pde-run", "--kappa", "1", "--mbar", "0.25", "--L", "20", "--num-points", "201",
        "--sigma", "2", "--omega", "1", "--t-final", "2", "--output-interval", "0.5",
        "--out", str(tmp_path),
    ])
    assert code == EXIT_OK
    front = (tmp_path / "front.csv").read_text(encoding="utf-8").splitlines()
    assert front[0] == "t,X"
    assert len(front) == 6
    assert (tmp_path / "snapshot_0004.csv").exists()


@pytest.mark.slow
def test_compare_with_default_interface(tmp_path):
    """compare runs from the narrow default initial bump and writes the comparison table"""
    code = run_cli([
        "compare", "--kappa", "1", "--mbar", "0.5", "--L", "100", "--num-points", "1001",
        "--t-final", "40", "--out", str(tmp_path),
    ])
    assert code == EXIT_OK
    lines = (tmp_path / "comparison.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == "sup_norm_N,sup_norm_M,optimal_shift,c_pde,c_ode,clamped"
    assert lines[1].split(",")[-1] in ("true", "false")
    record = json.loads((tmp_path / "manifest.json").read_text(encoding="utf-8"))
    results = record["results"]
    assert results["c_pde"] > 0.0
    assert results["c_ode"] >= 2.0 * math.sqrt(0.5) - 1e-9
    assert results["clamped"] == (results["c_ode"] != results["c_pde"])
    assert (tmp_path / "profile_ode.csv").exists()


@pytest.mark.slow
def test_ode_wave_clamped_to_bound():
    """A measured speed below 2 sqrt(1 - m_bar) is raised and flagged"""
    c_ode, outcome, clamped = ode_wave_near_speed(1.5, 1.0, 0.25, ShootConfig())
    assert clamped
    assert c_ode >= 2.0 * math.sqrt(0.75)
    assert outcome.m_inf == pytest.approx(0.25, abs=1e-3)


@pytest.mark.slow
def test_ode_wave_at_measured_speed():
    """A feasible speed is used as measured"""
    c_ode, outcome, clamped = ode_wave_near_speed(2.0, 1.0, 0.0, ShootConfig())
    assert not clamped
    assert c_ode == 2.0
    assert outcome.m_inf == 0.0


@pytest.mark.slow
def test_alpha1_seed_check(tmp_path):
    """alpha1 --check-seed records how far alpha1 moves when the seed is halved"""
    code = run_cli(["alpha1", "--c", "2", "--kappa", "1", "--check-seed", "--out", str(tmp_path)])
    assert code == EXIT_OK
    results = json.loads((tmp_path / "manifest.json").read_text(encoding="utf-8"))["results"]
    check = results["seed_check"]
    assert check["passed"] is True
    assert check["difference"] < 1e-5
    assert results["lower"] <= results["alpha1"] <= results["upper"]
