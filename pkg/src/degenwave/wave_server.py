# degenwave/wave_server.py

"""
MCP server exposing the travelling-wave computations as tools.

Short computations (a single shot, the closed-form speed, one conjecture cell)
are awaited. PDE runs are forked on the job runner and polled by job id.
"""
from mcp.server.fastmcp import FastMCP, Context
import json
import logging
from typing import Any, Dict, Optional

import psutil

from .async_runner import AsyncJobRunner, JobStatus
from .conjecture_lab import ScanVerdict, scan_cell, default_speed_rule
from .errors import DomainError
from .pde_simulator import PdeConfig, run, total_mass, track_front
from .shooting import (
    ShootConfig,
    ShootOutcome,
    classify_trajectory,
    find_alpha0,
    find_alpha1,
    find_alpha_for_mbar,
    min_speed_search,
)
from .utils import to_jsonable, worker_count

logger = logging.getLogger(__name__)

mcp = FastMCP("Degenwave")
runner = AsyncJobRunner(track_jobs=True)


def pde_speed_job(cfg: PdeConfig) -> Dict[str, Any]:
    """Run the PDE and fit the front speed; executed in a worker process"""
    states = run(cfg)
    track = track_front(states)
    return {
        "kappa": cfg.kappa,
        "M_bar": cfg.M_bar,
        "speed": track.speed_fit.slope,
        "intercept": track.speed_fit.intercept,
        "residual": track.speed_fit.residual,
        "t_final": states[-1].t,
        "final_front_position": track.positions[-1],
        "mass": total_mass(states[-1].N, states[-1].dx),
    }


def _outcome_summary(outcome: ShootOutcome) -> Dict[str, Any]:
    return {
        "kind": outcome.kind.value,
        "alpha": outcome.alpha,
        "c": outcome.c,
        "kappa": outcome.kappa,
        "T": outcome.T,
        "n_inf": outcome.n_inf,
        "p_inf": outcome.p_inf,
        "m_inf": outcome.m_inf,
        "confined": outcome.confined,
    }


def _job_failure(status: JobStatus) -> Optional[str]:
    if status.error is None:
        return None
    return json.dumps({"error": f"{type(status.error).__name__}: {status.error}", "job_id": status.job_id})


@mcp.tool()
async def classify_shot(
    ctx: Context,
    c: float,
    kappa: float,
    alpha: float,
) -> str:
    """Shoot from the invasion state along the unstable manifold and classify the fate of the orbit.

    Args:
        ctx: MCP context for providing progress updates
        c: Wave speed
        kappa: ECM degradation rate
        alpha: Shooting parameter scaling the m component of the seed

    Returns:
        str: JSON with the classification (ExitedNegativeN, ConvergedToMbar,
        ConvergedToM1 or Inconclusive), the first zero T of n and the limit state.

    Examples:
        "Classify the shot with c=1, kappa=1, alpha=3.72"
        "Does alpha=0 give a positive wave at c=1.9?"
    """
    await ctx.info(f"Shooting with c={c}, kappa={kappa}, alpha={alpha}...")
    status = await runner.execute(classify_trajectory, alpha, c, kappa)
    failure = _job_failure(status)
    if failure:
        return failure
    return json.dumps(to_jsonable(_outcome_summary(status.result)))


@mcp.tool()
async def search_alpha(
    ctx: Context,
    target: str,
    c: float,
    kappa: float,
    m_bar: Optional[float] = None,
) -> str:
    """Bisect for a critical shooting parameter.

    Args:
        ctx: MCP context for providing progress updates
        target: 'alpha0' (largest alpha whose orbit exits through n = 0),
            'alpha1' (smallest alpha converging to m = 1) or
            'mbar' (alpha whose orbit converges to the far-field density m_bar)
        c: Wave speed
        kappa: ECM degradation rate
        m_bar: Far-field density, required for target 'mbar'

    Returns:
        str: JSON with the alpha value and its bracket.

    Examples:
        "Find alpha1 for c=2 and kappa=1"
        "Which alpha reaches m_bar=0.5 at c=1.5?"
    """
    await ctx.info(f"Searching {target} for c={c}, kappa={kappa}...")
    if target == "alpha0":
        status = await runner.execute(find_alpha0, c, kappa)
    elif target == "alpha1":
        status = await runner.execute(find_alpha1, c, kappa)
    elif target == "mbar":
        if m_bar is None:
            return json.dumps({"error": "m_bar is required for target 'mbar'"})
        status = await runner.execute(find_alpha_for_mbar, c, kappa, m_bar)
    else:
        return json.dumps({"error": f"unknown target '{target}'; use alpha0, alpha1 or mbar"})
    await ctx.report_progress(1, 1)

    failure = _job_failure(status)
    if failure:
        return failure
    result = status.result
    if target == "mbar":
        payload = {"alpha": result.alpha, "lower": result.lower, "upper": result.upper,
                   "outcome": _outcome_summary(result.outcome)}
    else:
        payload = {"alpha": result.value, "lower": result.lower, "upper": result.upper}
    return json.dumps(to_jsonable(payload))


@mcp.tool()
async def minimal_speed(
    ctx: Context,
    kappa: float,
    m_bar: float,
    numeric: bool = False,
) -> str:
    """Minimal speed of travelling waves invading ECM of density m_bar.

    Args:
        ctx: MCP context for providing progress updates
        kappa: ECM degradation rate
        m_bar: Far-field ECM density in [0, 1)
        numeric: Bisect on the speed even when the closed form applies

    Returns:
        str: JSON with c_star, its bracket, the method used and the closed-form bound.

    Examples:
        "What is the minimal wave speed for kappa=1 and m_bar=0.25?"
    """
    await ctx.info(f"Minimal speed for kappa={kappa}, m_bar={m_bar} (numeric={numeric})...")
    status = await runner.execute(min_speed_search, kappa, m_bar, ShootConfig(), numeric)
    failure = _job_failure(status)
    if failure:
        return failure
    return json.dumps(to_jsonable(status.result))


@mcp.tool()
async def conjecture_cell(
    ctx: Context,
    kappa: float,
    m_bar: float,
    c: Optional[float] = None,
    branch: str = "plus",
    samples: int = 1000,
) -> str:
    """Check the minimal-speed conjecture's sign conditions for one (kappa, m_bar) pair.

    Args:
        ctx: MCP context for providing progress updates
        kappa: ECM degradation rate
        m_bar: Far-field ECM density in [0, 1)
        c: Test speed; 2 sqrt(1 - m_bar) when omitted
        branch: Root of P'(0) used to seed the phase-plane integration, 'minus' or 'plus'
        samples: Number of sample points, at least 1000

    Returns:
        str: JSON verdict with the flags g_kpp, H0_lt_1, H_lt_1, H_monotone, gdd_neg and a status.
    """
    if not 0.0 <= m_bar < 1.0:
        return json.dumps({"error": f"m_bar must lie in [0, 1), got {m_bar}"})
    speed = default_speed_rule(kappa, m_bar) if c is None else c
    await ctx.info(f"Conjecture cell kappa={kappa}, m_bar={m_bar}, c={speed:.6g}, branch={branch}...")
    status = await runner.execute(scan_cell, (float(kappa), float(m_bar), float(speed), branch, samples))
    failure = _job_failure(status)
    if failure:
        return failure
    verdict: ScanVerdict = status.result
    return json.dumps(to_jsonable(verdict))


@mcp.tool()
async def start_pde_run(
    ctx: Context,
    kappa: float,
    M_bar: float,
    L: float = 200.0,
    num_points: int = 2000,
    t_final: float = 100.0,
) -> str:
    """Start a background PDE simulation and front-speed fit.

    The run is forked on the job runner. Use get_job_status and get_job_result
    with the returned job id to follow it.

    Args:
        ctx: MCP context for providing progress updates
        kappa: ECM degradation rate
        M_bar: Initial far-field ECM density in [0, 1]
        L: Domain length
        num_points: Number of grid nodes
        t_final: End time

    Returns:
        str: JSON with the job id.

    Examples:
        "Simulate kappa=1, M_bar=0.25 and report the front speed"
    """
    try:
        cfg = PdeConfig(L=L, num_points=num_points, M_bar=M_bar, kappa=kappa, t_final=t_final)
    except DomainError as e:
        return json.dumps({"error": str(e)})
    await ctx.info(f"Starting PDE run kappa={kappa}, M_bar={M_bar} on {num_points} points...")
    status = await runner.fork(pde_speed_job, cfg, name="pde_run")
    return json.dumps({"job_id": status.job_id, "status": "running"})


@mcp.tool()
def get_job_status(ctx: Context, job_id: int) -> str:
    """Get the status of a forked job: not_found, running, completed or failed.

    Args:
        ctx: MCP context for providing progress updates
        job_id: Job id returned by start_pde_run
    """
    return json.dumps(runner.get_job(job_id))


@mcp.tool()
def get_job_result(ctx: Context, job_id: int) -> str:
    """Get the JSON result recorded by a finished job.

    Args:
        ctx: MCP context for providing progress updates
        job_id: Job id returned by start_pde_run
    """
    state = runner.get_job(job_id)
    if state["status"] == "running":
        return "Job is still running"
    if state["status"] == "not_found":
        return json.dumps(state)
    return runner.get_job_log(job_id)


@mcp.tool()
def cancel_job(job_id: int) -> str:
    """Cancel a forked job.

    Args:
        job_id: Job id returned by start_pde_run
    """
    try:
        if runner.cancel_job(job_id):
            return f"Job {job_id} cancelled successfully"
        return f"Job {job_id} has already finished"
    except Exception as e:
        return f"Failed to cancel job {job_id}: {e}"


@mcp.tool()
def get_compute_resources() -> str:
    """Get the CPU and memory available for sweeps and scans.

    Returns:
        str: JSON with physical and logical core counts, the worker count in use
        (after any DEGENWAVE_THREADS cap) and memory figures.

    Examples:
        "How many workers will a speed sweep use?"
    """
    memory = psutil.virtual_memory()
    info = {
        "physical_cores": psutil.cpu_count(logical=False),
        "logical_cores": psutil.cpu_count(logical=True),
        "workers": worker_count(),
        "memory": {
            "total": memory.total,
            "available": memory.available,
            "percent_used": memory.percent,
        },
        "cpu_usage_percent": psutil.cpu_percent(interval=0.1),
    }
    return json.dumps(info, indent=2)


def run_wave_server():
    """Entry point for the travelling-wave MCP server"""
    mcp.run()
