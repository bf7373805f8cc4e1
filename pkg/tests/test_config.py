import json

import pytest

from degenwave.config import ResolvedConfig, apply_overrides, load_config, parse_config
from degenwave.errors import ConfigError, DomainError


def test_empty_object_gives_defaults():
    """An empty file and an empty object both resolve to the defaults"""
    assert parse_config("{}") == ResolvedConfig()
    assert parse_config("") == ResolvedConfig()
    cfg = load_config(None)
    assert cfg.pde.L == 200.0
    assert cfg.pde.num_points == 2000
    assert cfg.pde.sigma == 0.2
    assert cfg.pde.omega == 0.1
    assert cfg.sweep.branch == "plus"


def test_partial_section():
    """Fields not given keep their defaults; ints are accepted for floats"""
    cfg = parse_config('{"model": {"kappa": 2}}')
    assert cfg.model.kappa == 2.0
    assert isinstance(cfg.model.kappa, float)
    assert cfg.model.m_bar == 0.0
    assert cfg.pde == ResolvedConfig().pde


def test_override_precedence(tmp_path):
    """Flags override the file, which overrides the defaults; None leaves the file value"""
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"model": {"kappa": 2.0, "m_bar": 0.25}}), encoding="utf-8")
    cfg = apply_overrides(load_config(path), {"model.kappa": 3.0, "model.m_bar": None})
    assert cfg.model.kappa == 3.0
    assert cfg.model.m_bar == 0.25


def test_malformed_json_reports_position():
    """Syntax errors carry the line and column"""
    with pytest.raises(ConfigError) as excinfo:
        parse_config('{\n  "model": {"kappa": 1,}\n}')
    assert excinfo.value.line == 2
    assert excinfo.value.column is not None
    assert "line 2" in str(excinfo.value)


def test_unknown_names():
    """Unknown sections, fields and overrides name the offender"""
    with pytest.raises(ConfigError) as excinfo:
        parse_config('{"model": {"speed": 1.0}}')
    assert excinfo.value.field == "model.speed"
    with pytest.raises(ConfigError) as excinfo:
        parse_config('{"solver": {}}')
    assert excinfo.value.field == "solver"
    with pytest.raises(ConfigError):
        apply_overrides(ResolvedConfig(), {"kappa": 1.0})


@pytest.mark.parametrize("text,field", [
    ('{"model": {"kappa": -1}}', "model.kappa"),
    ('{"model": {"m_bar": 1.5}}', "model.m_bar"),
    ('{"model": {"kappa": "fast"}}', "model.kappa"),
    ('{"pde": {"num_points": 10.5}}', "pde.num_points"),
    ('{"pde": {"L": true}}', "pde.L"),
    ('{"sweep": {"branch": "middle"}}', "sweep.branch"),
    ('{"sweep": {"kappa_list": []}}', "sweep.kappa_list"),
])
def test_invalid_values(text, field):
    """Wrong types and out-of-range values are configuration errors"""
    with pytest.raises(ConfigError) as excinfo:
        parse_config(text)
    assert excinfo.value.field == field


def test_config_error_is_domain_error():
    """Configuration problems map to the domain-error exit code"""
    assert issubclass(ConfigError, DomainError)


def test_missing_file(tmp_path):
    """An unreadable config file is a configuration error"""
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")


def test_solver_configs():
    """Sections convert into the solver configurations"""
    cfg = parse_config('{"model": {"kappa": 2.0, "m_bar": 0.5}, "pde": {"L": 50, "num_points": 101}}')
    pde = cfg.pde_config()
    assert pde.kappa == 2.0 and pde.M_bar == 0.5
    assert pde.dx == pytest.approx(0.5)
    assert cfg.pde_config(kappa=3.0).kappa == 3.0
    assert cfg.shoot_config().seed_epsilon == 1e-8


def test_solver_config_validation():
    """Values the solvers reject surface as configuration errors"""
    cfg = parse_config('{"pde": {"sigma": 0.05}}')
    with pytest.raises(ConfigError):
        cfg.pde_config()
    cfg = parse_config('{"shoot": {"seed_epsilon": 0.5}}')
    with pytest.raises(ConfigError):
        cfg.shoot_config()
