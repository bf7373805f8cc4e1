# degenwave/config.py

"""JSON run configuration with command-line overrides.

A configuration file is a JSON object with up to four sections:

    {"model": {...}, "pde": {...}, "shoot": {...}, "sweep": {...}}

Missing sections and fields take their defaults, which mirror the published
discretisation (L=200, 2000 points, sigma=0.2, omega=0.1). Values given on the
command line override the file.
"""
import json
import logging
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Union, get_args, get_origin, get_type_hints

from .errors import ConfigError, DomainError
from .pde_simulator import PdeConfig
from .shooting import ShootConfig

logger = logging.getLogger(__name__)


@dataclass
class ModelSection:
    kappa: float = 1.0
    c: Optional[float] = None
    m_bar: float = 0.0
    alpha: Optional[float] = None


@dataclass
class PdeSection:
    L: float = 200.0
    num_points: int = 2000
    sigma: float = 0.2
    omega: float = 0.1
    t_final: float = 100.0
    output_interval: float = 1.0
    rel_tol: float = 1e-6
    abs_tol: float = 1e-9


@dataclass
class ShootSection:
    seed_epsilon: float = 1e-8
    y_max: float = 1e4
    conv_tol: float = 1e-9
    dwell: float = 10.0
    exit_tol: float = 1e-8
    m1_tol: float = 1e-3
    mbar_tol: float = 1e-6
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_doublings: int = 3


@dataclass
class SweepSection:
    kappa_list: List[float] = field(default_factory=lambda: [1.0])
    m_bar_list: List[float] = field(default_factory=lambda: [0.0, 0.25, 0.5, 0.75])
    branch: str = "plus"
    workers: Optional[int] = None


@dataclass
class ResolvedConfig:
    """All four sections after defaults, file values and overrides are merged"""
    model: ModelSection = field(default_factory=ModelSection)
    pde: PdeSection = field(default_factory=PdeSection)
    shoot: ShootSection = field(default_factory=ShootSection)
    sweep: SweepSection = field(default_factory=SweepSection)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def pde_config(self, kappa: Optional[float] = None, M_bar: Optional[float] = None) -> PdeConfig:
        """PdeConfig for one run; kappa and M_bar default to the model section"""
        try:
            return PdeConfig(
                L=self.pde.L,
                num_points=self.pde.num_points,
                sigma=self.pde.sigma,
                omega=self.pde.omega,
                M_bar=self.model.m_bar if M_bar is None else M_bar,
                kappa=self.model.kappa if kappa is None else kappa,
                t_final=self.pde.t_final,
                output_interval=self.pde.output_interval,
                rel_tol=self.pde.rel_tol,
                abs_tol=self.pde.abs_tol,
            )
        except DomainError as e:
            raise ConfigError(str(e), field="pde")

    def shoot_config(self) -> ShootConfig:
        try:
            return ShootConfig(**asdict(self.shoot))
        except DomainError as e:
            raise ConfigError(str(e), field="shoot")


_SECTIONS = {
    "model": ModelSection,
    "pde": PdeSection,
    "shoot": ShootSection,
    "sweep": SweepSection,
}


def _coerce(value: Any, kind: Any, name: str) -> Any:
    """Check a JSON value against a field's declared type"""
    if get_origin(kind) is Union:
        if value is None:
            return None
        kind = next(arg for arg in get_args(kind) if arg is not type(None))
    if kind is str:
        if not isinstance(value, str):
            raise ConfigError(f"expected a string, got {value!r}", field=name)
        return value
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"expected an integer, got {value!r}", field=name)
        return value
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"expected a number, got {value!r}", field=name)
        return float(value)
    if get_origin(kind) is list:
        if not isinstance(value, list) or not value:
            raise ConfigError(f"expected a non-empty list of numbers, got {value!r}", field=name)
        return [_coerce(item, float, name) for item in value]
    return value


def _merge_section(section: Any, values: Dict[str, Any], prefix: str) -> Any:
    if not isinstance(values, dict):
        raise ConfigError("section must be a JSON object", field=prefix)
    hints = get_type_hints(type(section))
    updates = {}
    for key, value in values.items():
        name = f"{prefix}.{key}"
        if key not in hints:
            raise ConfigError("unknown field", field=name)
        updates[key] = _coerce(value, hints[key], name)
    return replace(section, **updates)


def _validate(cfg: ResolvedConfig) -> ResolvedConfig:
    if cfg.model.kappa <= 0:
        raise ConfigError(f"kappa must be positive, got {cfg.model.kappa}", field="model.kappa")
    if cfg.model.c is not None and cfg.model.c <= 0:
        raise ConfigError(f"c must be positive, got {cfg.model.c}", field="model.c")
    if not 0.0 <= cfg.model.m_bar <= 1.0:
        raise ConfigError(f"m_bar must lie in [0, 1], got {cfg.model.m_bar}", field="model.m_bar")
    if cfg.model.alpha is not None and cfg.model.alpha < 0:
        raise ConfigError(f"alpha must be non-negative, got {cfg.model.alpha}", field="model.alpha")
    if cfg.sweep.branch not in ("minus", "plus"):
        raise ConfigError(f"branch must be 'minus' or 'plus', got '{cfg.sweep.branch}'", field="sweep.branch")
    if cfg.sweep.workers is not None and cfg.sweep.workers < 1:
        raise ConfigError(f"workers must be at least 1, got {cfg.sweep.workers}", field="sweep.workers")
    return cfg


def parse_config(text: str, source: str = "<string>") -> ResolvedConfig:
    """Parse configuration JSON text into a ResolvedConfig.

    Raises:
        ConfigError: On malformed JSON (with line and column), unknown sections or
            fields, and values of the wrong type or outside their range.
    """
    try:
        data = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as e:
        raise ConfigError(f"malformed JSON in {source}: {e.msg}", line=e.lineno, column=e.colno)
    if not isinstance(data, dict):
        raise ConfigError(f"top level of {source} must be a JSON object")

    cfg = ResolvedConfig()
    for key, values in data.items():
        if key not in _SECTIONS:
            raise ConfigError("unknown section", field=key)
        setattr(cfg, key, _merge_section(getattr(cfg, key), values, key))
    return _validate(cfg)


def load_config(path: Optional[Union[str, Path]] = None) -> ResolvedConfig:
    """Load a configuration file; ``None`` gives the full defaults"""
    if path is None:
        return ResolvedConfig()
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e}")
    cfg = parse_config(text, source=str(path))
    logger.debug(f"Loaded configuration from {path}")
    return cfg


def apply_overrides(cfg: ResolvedConfig, overrides: Dict[str, Any]) -> ResolvedConfig:
    """Apply dotted-name overrides such as ``{"model.kappa": 3.0}``.

    ``None`` values are skipped so unset command-line flags leave the file values alone.
    """
    merged = ResolvedConfig(
        model=replace(cfg.model), pde=replace(cfg.pde),
        shoot=replace(cfg.shoot), sweep=replace(cfg.sweep),
    )
    for name, value in overrides.items():
        if value is None:
            continue
        section_name, _, key = name.partition(".")
        if section_name not in _SECTIONS or not key:
            raise ConfigError("unknown override", field=name)
        section = getattr(merged, section_name)
        setattr(merged, section_name, _merge_section(section, {key: value}, section_name))
    return _validate(merged)
