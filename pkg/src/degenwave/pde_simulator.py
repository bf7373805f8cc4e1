# degenwave/pde_simulator.py

"""Method-of-lines simulation of the invasion model with degenerate diffusion.

    N_t = ((1 - M) N_x)_x + N (1 - N),    M_t = -kappa M N,   0 < x < L

The semi-discrete system uses a conservative flux stencil with zero-flux
(mirror) boundaries for N. M has no spatial derivative, so it needs no
boundary condition. Time stepping uses TR-BDF2, a one-step, L-stable,
second-order scheme. Each stage is solved by Newton with the analytic sparse
Jacobian, and the step size is adapted with the scheme's embedded error
estimate. Outputs come from cubic Hermite interpolation inside accepted steps.
"""
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.integrate import trapezoid
from scipy.interpolate import CubicHermiteSpline
from scipy.sparse.linalg import splu

from .errors import DegenwaveError, DomainError, FrontNotFoundError, InsufficientDataError, IntegrationError

logger = logging.getLogger(__name__)

BUMP_GUARD = 1e-14

# TR-BDF2 coefficients
_GAMMA = 2.0 - math.sqrt(2.0)
_D = _GAMMA / 2.0
_W = math.sqrt(2.0) / 4.0
_ERR = ((4.0 * _W - 1.0) / 3.0, -1.0 / 3.0, 2.0 * _D / 3.0)


@dataclass(frozen=True)
class PdeConfig:
    """Grid, initial data and solver settings of a PDE run.

    Attributes:
        L (float): Domain length.
        num_points (int): Number of grid nodes, including both ends.
        sigma (float): Initial extent of the tumour.
        omega (float): Width of the smooth interface at the tumour edge.
        M_bar (float): Far-field ECM density in [0, 1].
        kappa (float): Degradation rate.
        t_final (float): End time.
        output_times (Optional[tuple]): Requested output times; every
            ``output_interval`` from 0 to t_final when None.
        output_interval (float): Spacing of the default output times.
        rel_tol (float): Relative local error tolerance.
        abs_tol (float): Absolute local error tolerance.
        max_newton (int): Newton iterations allowed per stage.
    """
    L: float = 200.0
    num_points: int = 2000
    sigma: float = 0.2
    omega: float = 0.1
    M_bar: float = 0.0
    kappa: float = 1.0
    t_final: float = 100.0
    output_times: Optional[tuple] = None
    output_interval: float = 1.0
    rel_tol: float = 1e-6
    abs_tol: float = 1e-9
    max_newton: int = 8

    def __post_init__(self):
        if not 0.0 < self.omega < self.sigma < self.L:
            raise DomainError(
                f"need 0 < omega < sigma < L, got omega={self.omega}, sigma={self.sigma}, L={self.L}"
            )
        if self.num_points < 16:
            raise DomainError(f"num_points must be at least 16, got {self.num_points}")
        if not 0.0 <= self.M_bar <= 1.0:
            raise DomainError(f"M_bar must lie in [0, 1], got {self.M_bar}")
        if not self.kappa > 0:
            raise DomainError(f"kappa must be positive, got {self.kappa}")
        if not self.t_final > 0:
            raise DomainError(f"t_final must be positive, got {self.t_final}")
        if not self.output_interval > 0:
            raise DomainError(f"output_interval must be positive, got {self.output_interval}")
        if self.output_times is not None:
            times = list(self.output_times)
            if not times or any(t < 0 or t > self.t_final for t in times) or times != sorted(times):
                raise DomainError("output_times must be sorted and lie in [0, t_final]")

    @property
    def dx(self) -> float:
        return self.L / (self.num_points - 1)

    def times(self) -> np.ndarray:
        if self.output_times is not None:
            return np.asarray(self.output_times, dtype=float)
        count = int(math.floor(self.t_final / self.output_interval + 1e-9))
        times = self.output_interval * np.arange(count + 1)
        if times[-1] < self.t_final - 1e-12:
            times = np.append(times, self.t_final)
        return times


@dataclass
class PdeState:
    """Grid fields at time t on nodes x_r = r dx"""
    t: float
    N: np.ndarray
    M: np.ndarray
    dx: float

    @property
    def x(self) -> np.ndarray:
        return self.dx * np.arange(self.N.size)


@dataclass(frozen=True)
class SpeedFit:
    """Least-squares line X(t) = slope t + intercept with its RMS residual"""
    slope: float
    intercept: float
    residual: float


@dataclass
class FrontTrack:
    """Front positions X(t) where N(X(t), t) equals the tracking level"""
    times: List[float]
    positions: List[float]
    speed_fit: SpeedFit


@dataclass
class SweepRecord:
    """One (kappa, M_bar) cell of a speed sweep"""
    kappa: float
    M_bar: float
    speed: Optional[float] = None
    fit_residual: Optional[float] = None
    status: str = "ok"
    message: str = ""


def grid(cfg: PdeConfig) -> np.ndarray:
    return np.linspace(0.0, cfg.L, cfg.num_points)


def initial_condition(cfg: PdeConfig) -> PdeState:
    """Tumour plateau on [0, sigma - omega), smooth bump on [sigma - omega, sigma), empty beyond.

    On the bump N = exp(1 - 1 / (1 - s^2)) with s = (x - sigma + omega) / omega,
    and M = M_bar (1 - N) everywhere.
    """
    x = grid(cfg)
    s = (x - cfg.sigma + cfg.omega) / cfg.omega
    on_bump = (x >= cfg.sigma - cfg.omega) & (x < cfg.sigma)
    N = np.where(x < cfg.sigma - cfg.omega, 1.0, 0.0)
    arg = 1.0 - s[on_bump] ** 2
    bump = np.zeros_like(arg)
    safe = arg > BUMP_GUARD
    bump[safe] = np.exp(1.0 - 1.0 / arg[safe])
    N[on_bump] = bump
    M = cfg.M_bar * (1.0 - N)
    if not np.any(N > 0):
        raise DomainError("initial tumour density vanishes everywhere; refine the grid or widen sigma")
    return PdeState(t=0.0, N=N, M=M, dx=cfg.dx)


def diffusion_divergence(N: np.ndarray, M: np.ndarray, dx: float) -> np.ndarray:
    """Conservative discretisation of ((1 - M) N_x)_x with zero-flux ends.

    At interior node r this is
    [(D_{r-1} + D_r) N_{r-1} - (D_{r-1} + 2 D_r + D_{r+1}) N_r + (D_r + D_{r+1}) N_{r+1}] / (2 dx^2)
    with D = 1 - M; end nodes use mirrored ghost values.
    """
    N = np.asarray(N, dtype=float)
    M = np.asarray(M, dtype=float)
    if N.shape != M.shape or N.ndim != 1 or N.size < 3:
        raise DomainError("N and M must be 1-D fields of equal length >= 3")
    if not dx > 0:
        raise DomainError(f"dx must be positive, got {dx}")
    D_face = 1.0 - 0.5 * (M[:-1] + M[1:])
    flux = D_face * np.diff(N)
    div = np.zeros_like(N)
    div[:-1] += flux
    div[1:] -= flux
    div[0] *= 2.0
    div[-1] *= 2.0
    return div / (dx * dx)


def total_mass(N: np.ndarray, dx: float) -> float:
    """Trapezoid-weighted sum of N dx, conserved exactly by the zero-flux stencil"""
    return float(trapezoid(N, dx=dx))


class _SemiDiscrete:
    """Right-hand side and sparse Jacobian of the method-of-lines system u = [N, M]"""

    def __init__(self, n: int, dx: float, kappa: float, reactions: bool = True):
        self.n = n
        self.dx = dx
        self.kappa = kappa
        self.reactions = reactions
        self.E = sp.diags([-np.ones(n - 1), np.ones(n - 1)], [0, 1], shape=(n - 1, n), format="csr")
        self.A = sp.diags([0.5 * np.ones(n - 1), 0.5 * np.ones(n - 1)], [0, 1], shape=(n - 1, n), format="csr")
        weights = np.ones(n)
        weights[0] = weights[-1] = 2.0
        self.WEt = (sp.diags(weights) @ self.E.T).tocsr() / (dx * dx)
        self.identity = sp.identity(2 * n, format="csc")

    def rhs(self, u: np.ndarray) -> np.ndarray:
        n = self.n
        N, M = u[:n], u[n:]
        out = np.empty_like(u)
        out[:n] = diffusion_divergence(N, M, self.dx)
        if self.reactions:
            out[:n] += N * (1.0 - N)
            out[n:] = -self.kappa * M * N
        else:
            out[n:] = 0.0
        return out

    def jacobian(self, u: np.ndarray) -> sp.csc_matrix:
        n = self.n
        N, M = u[:n], u[n:]
        D_face = 1.0 - self.A @ M
        J_NN = -(self.WEt @ sp.diags(D_face) @ self.E)
        J_NM = self.WEt @ sp.diags(self.E @ N) @ self.A
        if self.reactions:
            J_NN = J_NN + sp.diags(1.0 - 2.0 * N)
            J_MN = sp.diags(-self.kappa * M)
            J_MM = sp.diags(-self.kappa * N)
        else:
            J_MN = sp.csr_matrix((n, n))
            J_MM = sp.csr_matrix((n, n))
        return sp.bmat([[J_NN, J_NM], [J_MN, J_MM]], format="csc")


def _rms(v: np.ndarray) -> float:
    return float(np.sqrt(np.mean(v * v)))


def _newton(system: _SemiDiscrete, lu, z: np.ndarray, rhs_const: np.ndarray, dh: float,
            scale: np.ndarray, max_iter: int) -> Optional[np.ndarray]:
    """Solve z - dh f(z) = rhs_const by simplified Newton; None on failure"""
    previous = math.inf
    for _ in range(max_iter):
        residual = z - dh * system.rhs(z) - rhs_const
        delta = lu.solve(-residual)
        z = z + delta
        size = _rms(delta / scale)
        if not np.isfinite(size):
            return None
        if size < 1e-3:
            return z
        if size > 0.9 * previous:
            return None
        previous = size
    return None


def run(cfg: PdeConfig, initial: Optional[PdeState] = None, reactions: bool = True) -> List[PdeState]:
    """Advance the semi-discrete system and return the states at the requested output times.

    Args:
        cfg: Run configuration.
        initial: Initial state; ``initial_condition(cfg)`` if None.
        reactions: Switches the reaction terms off when False (used to check the
            conservation properties of the diffusion stencil).

    Returns:
        List[PdeState]: One state per output time, in order.

    Raises:
        IntegrationError: If Newton keeps failing down to the step-size floor. The
            states emitted so far are attached as ``partial``.
    """
    state0 = initial if initial is not None else initial_condition(cfg)
    n = state0.N.size
    dx = state0.dx
    system = _SemiDiscrete(n, dx, cfg.kappa, reactions)
    out_times = cfg.times()

    t = 0.0
    u = np.concatenate([state0.N, state0.M]).astype(float)
    f = system.rhs(u)
    outputs: List[PdeState] = []
    next_out = 0
    while next_out < out_times.size and out_times[next_out] <= 0.0:
        outputs.append(PdeState(t=float(out_times[next_out]), N=u[:n].copy(), M=u[n:].copy(), dx=dx))
        next_out += 1

    h = min(1e-3, cfg.t_final)
    steps = rejected = 0
    logger.info(f"PDE run: kappa={cfg.kappa}, M_bar={cfg.M_bar}, {n} nodes, t_final={cfg.t_final}")

    while t < cfg.t_final - 1e-12 and next_out < out_times.size:
        h = min(h, cfg.t_final - t)
        if h < 1e-10 * max(1.0, t):
            raise IntegrationError(f"step size underflow at t={t:.6g}", partial=outputs)

        scale = cfg.abs_tol + cfg.rel_tol * np.abs(u)
        dh = _D * h
        lu = splu((system.identity - dh * system.jacobian(u)).tocsc())

        z = _newton(system, lu, u + _GAMMA * h * f, u + dh * f, dh, scale, cfg.max_newton)
        u_new = None
        if z is not None:
            f_gamma = system.rhs(z)
            u_new = _newton(system, lu, z + (1.0 - _GAMMA) * h * f_gamma,
                            u + _W * h * (f + f_gamma), dh, scale, cfg.max_newton)
        if u_new is None:
            rejected += 1
            h *= 0.5
            logger.debug(f"Newton failed at t={t:.6g}; halving step to {h:.3g}")
            continue

        f_new = system.rhs(u_new)
        estimate = h * (_ERR[0] * f + _ERR[1] * f_gamma + _ERR[2] * f_new)
        err = _rms(lu.solve(estimate) / (cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(u), np.abs(u_new))))
        if err > 1.0:
            rejected += 1
            h *= max(0.2, 0.9 * err ** (-1.0 / 3.0))
            continue

        t_new = t + h
        while next_out < out_times.size and out_times[next_out] <= t_new + 1e-12:
            t_out = float(out_times[next_out])
            if abs(t_out - t_new) <= 1e-12:
                v = u_new
            else:
                spline = CubicHermiteSpline([t, t_new], np.vstack([u, u_new]), np.vstack([f, f_new]), axis=0)
                v = spline(t_out)
            outputs.append(PdeState(t=t_out, N=v[:n].copy(), M=v[n:].copy(), dx=dx))
            next_out += 1

        t, u, f = t_new, u_new, f_new
        steps += 1
        factor = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** (-1.0 / 3.0)))
        h *= factor

    logger.info(f"PDE run finished: {steps} steps, {rejected} rejected, {len(outputs)} outputs")
    return outputs


def _front_position(state: PdeState, level: float) -> float:
    above = state.N >= level
    changes = np.flatnonzero(above[:-1] != above[1:])
    if changes.size != 1 or not above[changes[0]]:
        raise FrontNotFoundError(
            f"expected one downward crossing of N={level} at t={state.t:.6g}, found {changes.size}"
        )
    i = changes[0]
    v0, v1 = state.N[i], state.N[i + 1]
    return float(state.dx * (i + (v0 - level) / (v0 - v1)))


def track_front(states: Sequence[PdeState], level: float = 0.5) -> FrontTrack:
    """Front positions by linear interpolation, and a least-squares speed over the last half of the window.

    States before the fit window may predate the front: a narrow initial bump
    first spreads below the level before growth rebuilds it. Those states are
    kept only where a single crossing exists.

    Raises:
        FrontNotFoundError: If a state inside the fit window has no crossing or more than one.
        InsufficientDataError: If fewer than two states fall in the fit window.
    """
    if not states:
        raise InsufficientDataError("no states to track")
    t_all = np.asarray([float(s.t) for s in states])
    fit_start = t_all[0] + 0.5 * (t_all[-1] - t_all[0])
    times: List[float] = []
    positions: List[float] = []
    in_window: List[bool] = []
    for state, t in zip(states, t_all):
        inside = bool(t >= fit_start)
        try:
            position = _front_position(state, level)
        except FrontNotFoundError as e:
            if inside:
                raise
            logger.debug(f"Skipping transient state: {e}")
            continue
        times.append(float(t))
        positions.append(position)
        in_window.append(inside)
    window = np.asarray(in_window)
    if np.count_nonzero(window) < 2:
        raise InsufficientDataError("fewer than two front positions in the fit window")
    t_arr = np.asarray(times)[window]
    x_arr = np.asarray(positions)[window]
    slope, intercept = np.polyfit(t_arr, x_arr, 1)
    residual = _rms(x_arr - (slope * t_arr + intercept))
    return FrontTrack(
        times=times,
        positions=positions,
        speed_fit=SpeedFit(slope=float(slope), intercept=float(intercept), residual=residual),
    )


def _sweep_cell(cfg: PdeConfig) -> SweepRecord:
    try:
        track = track_front(run(cfg))
        return SweepRecord(
            kappa=cfg.kappa, M_bar=cfg.M_bar,
            speed=track.speed_fit.slope, fit_residual=track.speed_fit.residual,
        )
    except DegenwaveError as e:
        logger.warning(f"Sweep cell kappa={cfg.kappa}, M_bar={cfg.M_bar} failed: {e}")
        return SweepRecord(kappa=cfg.kappa, M_bar=cfg.M_bar, status="failed", message=str(e))


def speed_sweep(
    kappa_list: Sequence[float],
    M_bar_list: Sequence[float],
    cfg_template: PdeConfig = PdeConfig(),
    workers: int = 1,
) -> List[SweepRecord]:
    """Measure the front speed for every (kappa, M_bar) pair, kappa-major.

    Failed cells are returned with status ``failed``; the sweep never aborts.
    Results keep input order whatever the worker count.
    """
    if not kappa_list or not M_bar_list:
        raise DomainError("kappa_list and M_bar_list must be non-empty")
    configs = [
        replace(cfg_template, kappa=float(kappa), M_bar=float(M_bar))
        for kappa in kappa_list for M_bar in M_bar_list
    ]
    logger.info(f"Speed sweep over {len(configs)} cells with {workers} worker(s)")
    if workers <= 1 or len(configs) == 1:
        return [_sweep_cell(cfg) for cfg in configs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_sweep_cell, configs))
