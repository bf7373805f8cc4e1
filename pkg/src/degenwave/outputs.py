# degenwave/outputs.py

"""Result files: CSV tables, profile CSVs and the run manifest.

All CSVs are UTF-8 with LF line endings and a header row. Floats are written
with 12 significant digits so identical inputs give byte-identical files.
"""
import csv
import hashlib
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

import numpy as np

from .errors import OutputError
from .wave_reconstruction import WaveProfile

logger = logging.getLogger(__name__)

PROFILE_HEADER = ("xi", "N", "M")
TRAJECTORY_HEADER = ("y", "n", "p", "m")
SWEEP_HEADER = ("kappa", "M_bar", "speed", "residual", "status")
FRONT_HEADER = ("t", "X")
SNAPSHOT_HEADER = ("x", "N", "M")
ALPHA_SCAN_HEADER = ("alpha", "kind", "T", "n_inf", "m_inf")
COMPARISON_HEADER = ("sup_norm_N", "sup_norm_M", "optimal_shift", "c_pde", "c_ode", "clamped")
CONJECTURE_HEADER = ("kappa", "m_bar", "c", "branch", "g_kpp", "H0_lt_1", "H_lt_1", "H_monotone", "gdd_neg", "status")


def format_value(value: Any) -> str:
    """Render a table cell: floats at 12 significant digits, None as an empty cell"""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return f"{value:.12g}"
    return str(value)


def input_digest(params: Dict[str, Any]) -> str:
    """SHA-256 of the canonical JSON of the resolved parameters"""
    canonical = json.dumps(params, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@dataclass
class Table:
    """A CSV table with a fixed header"""
    header: Sequence[str]
    rows: List[Sequence[Any]] = field(default_factory=list)

    def add(self, *values: Any):
        if len(values) != len(self.header):
            raise ValueError(f"row has {len(values)} cells, header has {len(self.header)}")
        self.rows.append(values)


@dataclass
class RunManifest:
    """Record of one CLI run.

    Attributes:
        command (str): Subcommand name.
        params (Dict[str, Any]): Resolved parameter set.
        seed_hash (str): Digest of ``params``.
        outputs (List[str]): Paths written, relative to the output directory.
        wall_time (float): Seconds spent in the command.
        results (Dict[str, Any]): Scalar results worth keeping next to the tables.
    """
    command: str
    params: Dict[str, Any]
    seed_hash: str = ""
    outputs: List[str] = field(default_factory=list)
    wall_time: float = 0.0
    results: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if not self.seed_hash:
            self.seed_hash = input_digest({"command": self.command, "params": self.params})

    def to_dict(self) -> Dict[str, Any]:
        return {
            "command": self.command,
            "params": self.params,
            "seed_hash": self.seed_hash,
            "outputs": list(self.outputs),
            "wall_time": self.wall_time,
            "results": self.results,
        }


def write_csv(path: Union[str, Path], header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(v) for v in row])
    return path


def profile_table(profile: WaveProfile) -> Table:
    return Table(PROFILE_HEADER, list(zip(profile.xi, profile.N_vals, profile.M_vals)))


def write_outputs(
    manifest: RunManifest,
    tables: Optional[Dict[str, Table]] = None,
    profiles: Optional[Dict[str, WaveProfile]] = None,
    out_dir: Union[str, Path] = ".",
) -> List[Path]:
    """Write every table and profile as CSV, then ``manifest.json``.

    Args:
        manifest: Run record; its ``outputs`` list is filled in here.
        tables: File name to table.
        profiles: File name to profile, written with header ``xi,N,M``.
        out_dir: Output directory, created if missing.

    Returns:
        List[Path]: Paths written, manifest last.

    Raises:
        OutputError: If any file cannot be written. Files written before the
            failure are left in place and listed in the message.
    """
    out = Path(out_dir)
    written: List[Path] = []
    items = dict(tables or {})
    for name, profile in (profiles or {}).items():
        items[name] = profile_table(profile)
    try:
        out.mkdir(parents=True, exist_ok=True)
        for name in sorted(items):
            table = items[name]
            written.append(write_csv(out / name, table.header, table.rows))
        manifest.outputs = [p.name for p in written]
        manifest_path = out / "manifest.json"
        with open(manifest_path, "w", encoding="utf-8", newline="\n") as f:
            json.dump(manifest.to_dict(), f, indent=2, sort_keys=True, default=str)
            f.write("\n")
        written.append(manifest_path)
    except OSError as e:
        partial = ", ".join(p.name for p in written) or "none"
        logger.warning(f"Output incomplete; files written so far: {partial}")
        raise OutputError(f"cannot write outputs to {out}: {e}")
    logger.info(f"Wrote {len(written)} files to {out}")
    return written
