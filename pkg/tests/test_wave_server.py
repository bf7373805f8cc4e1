import json
import math

import pytest
import pytest_asyncio

from degenwave import wave_server
from degenwave.async_runner import AsyncJobRunner


class FakeContext:
    """Collects the messages a tool sends to the client"""

    def __init__(self):
        self.messages = []
        self.progress = []

    async def info(self, message):
        self.messages.append(message)

    async def report_progress(self, progress, total=None):
        self.progress.append((progress, total))


@pytest.fixture
def ctx():
    return FakeContext()


@pytest_asyncio.fixture(autouse=True)
async def thread_runner(monkeypatch):
    """Swap the server's process pool for a thread-backed runner"""
    job_runner = AsyncJobRunner(track_jobs=True, use_processes=False, max_workers=2)
    monkeypatch.setattr(wave_server, "runner", job_runner)
    yield job_runner
    await job_runner.teardown()


@pytest.mark.asyncio
async def test_classify_shot(ctx):
    """A KPP shot at c=2 stays positive"""
    result = json.loads(await wave_server.classify_shot(ctx, c=2.0, kappa=1.0, alpha=0.0))
    assert result["kind"] != "ExitedNegativeN"
    assert result["alpha"] == 0.0
    assert ctx.messages


@pytest.mark.asyncio
async def test_classify_shot_error(ctx):
    """Invalid parameters come back as an error payload"""
    result = json.loads(await wave_server.classify_shot(ctx, c=-1.0, kappa=1.0, alpha=1.0))
    assert "error" in result
    assert "DomainError" in result["error"]


@pytest.mark.asyncio
async def test_search_alpha0_fast_speed(ctx):
    """alpha0 vanishes for c >= 2"""
    result = json.loads(await wave_server.search_alpha(ctx, target="alpha0", c=2.5, kappa=1.0))
    assert result == {"alpha": 0.0, "lower": 0.0, "upper": 0.0}
    assert ctx.progress == [(1, 1)]


@pytest.mark.asyncio
async def test_search_alpha_bad_target(ctx):
    """Unknown targets and a missing m_bar are reported"""
    assert "error" in json.loads(await wave_server.search_alpha(ctx, target="alpha2", c=1.0, kappa=1.0))
    assert "error" in json.loads(await wave_server.search_alpha(ctx, target="mbar", c=1.0, kappa=1.0))


@pytest.mark.asyncio
async def test_minimal_speed(ctx):
    """The closed form applies below m*(kappa)"""
    result = json.loads(await wave_server.minimal_speed(ctx, kappa=1.0, m_bar=0.25))
    assert result["c_star"] == pytest.approx(2.0 * math.sqrt(0.75))
    assert result["method"] == "formula"
    assert result["formula"]["exact"] is True


@pytest.mark.asyncio
async def test_conjecture_cell(ctx):
    """H(0) is decided for a fast-degradation cell"""
    result = json.loads(await wave_server.conjecture_cell(ctx, kappa=10.0, m_bar=0.75))
    assert result["H0_lt_1"] is False
    assert result["c"] == pytest.approx(1.0)
    bad = json.loads(await wave_server.conjecture_cell(ctx, kappa=1.0, m_bar=1.0))
    assert "error" in bad


@pytest.mark.asyncio
async def test_pde_job_lifecycle(ctx, thread_runner):
    """A forked PDE run can be followed to completion by job id"""
    started = json.loads(await wave_server.start_pde_run(
        ctx, kappa=1.0, M_bar=0.0, L=20.0, num_points=201, t_final=1.0,
    ))
    job_id = started["job_id"]
    assert started["status"] == "running"
    await thread_runner.wait_for_job(job_id, timeout_seconds=120)
    status = json.loads(wave_server.get_job_status(ctx, job_id))
    assert status["status"] in ("completed", "failed")
    record = json.loads(wave_server.get_job_result(ctx, job_id))
    assert record["job_id"] == job_id


@pytest.mark.asyncio
async def test_start_pde_run_invalid(ctx):
    """Bad grid settings are rejected before a job is forked"""
    result = json.loads(await wave_server.start_pde_run(ctx, kappa=1.0, M_bar=2.0))
    assert "error" in result


@pytest.mark.asyncio
async def test_job_queries_unknown_id(ctx):
    """Unknown job ids are reported as not found"""
    assert json.loads(wave_server.get_job_status(ctx, 999))["status"] == "not_found"
    assert "not found" in wave_server.cancel_job(999)


def test_compute_resources():
    """Core counts and memory figures are reported"""
    info = json.loads(wave_server.get_compute_resources())
    assert info["workers"] >= 1
    assert info["logical_cores"] >= 1
    assert info["memory"]["total"] > 0
