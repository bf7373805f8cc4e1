import json

import numpy as np
import pytest

from degenwave.errors import OutputError
from degenwave.outputs import (
    PROFILE_HEADER,
    SWEEP_HEADER,
    RunManifest,
    Table,
    format_value,
    input_digest,
    write_outputs,
)
from degenwave.wave_reconstruction import WaveProfile


def sample_profile():
    xi = np.linspace(-1.0, 1.0, 5)
    return WaveProfile(xi=xi, N_vals=1.0 - (xi + 1.0) / 2.0, M_vals=(xi + 1.0) / 4.0, speed=2.0)


def test_format_value():
    """Floats use 12 significant digits; flags and missing values have fixed spellings"""
    assert format_value(1.0 / 3.0) == "0.333333333333"
    assert format_value(np.float64(2.0)) == "2"
    assert format_value(None) == ""
    assert format_value(True) == "true"
    assert format_value(np.bool_(False)) == "false"
    assert format_value(float("inf")) == "inf"
    assert format_value(float("nan")) == "nan"
    assert format_value("ok") == "ok"


def test_table_row_length():
    """Rows must match the header"""
    table = Table(SWEEP_HEADER)
    table.add(1.0, 0.25, 1.7, 1e-3, "ok")
    with pytest.raises(ValueError):
        table.add(1.0, 0.25)


def test_manifest_digest():
    """The digest depends on the command and parameters only"""
    a = RunManifest(command="min-speed", params={"kappa": 1.0, "m_bar": 0.25})
    b = RunManifest(command="min-speed", params={"m_bar": 0.25, "kappa": 1.0}, wall_time=5.0)
    c = RunManifest(command="min-speed", params={"kappa": 2.0, "m_bar": 0.25})
    assert a.seed_hash == b.seed_hash
    assert a.seed_hash != c.seed_hash
    assert len(a.seed_hash) == 64
    assert input_digest({"x": 1}) == input_digest({"x": 1})


def test_write_outputs(tmp_path):
    """Tables and profiles become CSVs with headers, followed by the manifest"""
    table = Table(SWEEP_HEADER)
    table.add(1.0, 0.0, 2.0, None, "ok")
    manifest = RunManifest(command="speed-sweep", params={"kappa": 1.0})
    written = write_outputs(manifest, {"sweep.csv": table}, {"profile.csv": sample_profile()}, tmp_path)

    assert [p.name for p in written] == ["profile.csv", "sweep.csv", "manifest.json"]
    sweep = (tmp_path / "sweep.csv").read_bytes()
    assert sweep == b"kappa,M_bar,speed,residual,status\n1,0,2,,ok\n"
    profile_lines = (tmp_path / "profile.csv").read_text(encoding="utf-8").splitlines()
    assert profile_lines[0] == ",".join(PROFILE_HEADER)
    assert len(profile_lines) == 6

    record = json.loads((tmp_path / "manifest.json").read_text(encoding="utf-8"))
    assert record["command"] == "speed-sweep"
    assert record["outputs"] == ["profile.csv", "sweep.csv"]
    assert record["seed_hash"] == manifest.seed_hash


def test_write_outputs_deterministic(tmp_path):
    """Identical inputs give byte-identical tables"""
    for name in ("a", "b"):
        table = Table(SWEEP_HEADER)
        table.add(1.0 / 7.0, 0.5, np.sqrt(2.0), 1e-9, "ok")
        write_outputs(RunManifest(command="speed-sweep", params={}), {"sweep.csv": table}, None, tmp_path / name)
    assert (tmp_path / "a" / "sweep.csv").read_bytes() == (tmp_path / "b" / "sweep.csv").read_bytes()


def test_write_outputs_failure(tmp_path):
    """An unusable output directory raises OutputError"""
    blocker = tmp_path / "file"
    blocker.write_text("x", encoding="utf-8")
    with pytest.raises(OutputError):
        write_outputs(RunManifest(command="shoot", params={}), {}, None, blocker / "sub")
