# degenwave/wave_reconstruction.py

"""Physical travelling-wave profiles and their comparison.

A desingularised trajectory is parametrised by y with dy/dxi = 1 / (1 - M).
The physical coordinate is recovered as xi(y) = y - int m ds, computed by
quadrature on the integrator's own samples and anchored so that N = 0.5 at
xi = 0. PDE snapshots use the same anchor, so profiles from both sources can
be compared directly. Past the ends of a trajectory a profile can be continued
with the linearised manifolds of the end states.
"""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import ComplexRootsError, DegenerateMapError, DomainError, FrontNotFoundError
from .model_core import ModelParams, saddle_eigen, tail_eigen
from .ode_integrator import Trajectory
from .utils import cumulative_hermite_trapezoid

logger = logging.getLogger(__name__)

ANCHOR_LEVEL = 0.5


@dataclass
class WaveProfile:
    """Sampled travelling-wave profile in the co-moving coordinate xi.

    Attributes:
        xi (np.ndarray): Strictly increasing sample coordinates.
        N_vals (np.ndarray): Tumour density.
        M_vals (np.ndarray): ECM density.
        speed (float): Wave speed c.
        source (str): ``ODE`` or ``PDE``.
    """
    xi: np.ndarray
    N_vals: np.ndarray
    M_vals: np.ndarray
    speed: float
    source: str = "ODE"

    def __post_init__(self):
        self.xi = np.asarray(self.xi, dtype=float)
        self.N_vals = np.asarray(self.N_vals, dtype=float)
        self.M_vals = np.asarray(self.M_vals, dtype=float)
        if not (self.xi.shape == self.N_vals.shape == self.M_vals.shape):
            raise DomainError("profile arrays differ in shape")
        if self.xi.size > 1 and np.any(np.diff(self.xi) <= 0):
            raise DomainError("profile coordinates must be strictly increasing")
        if self.source not in ("ODE", "PDE"):
            raise DomainError(f"unknown profile source '{self.source}'")

    def is_monotone(self, tol: float = 1e-8) -> bool:
        """N non-increasing and M non-decreasing, up to tol"""
        return bool(np.all(np.diff(self.N_vals) <= tol) and np.all(np.diff(self.M_vals) >= -tol))

    def shifted(self, shift: float) -> "WaveProfile":
        return WaveProfile(self.xi + shift, self.N_vals.copy(), self.M_vals.copy(), self.speed, self.source)


def _level_crossing(x: np.ndarray, values: np.ndarray, level: float) -> float:
    """First downward crossing of ``level`` by linear interpolation"""
    above = values >= level
    idx = np.flatnonzero(above[:-1] & ~above[1:])
    if idx.size == 0:
        raise FrontNotFoundError(f"profile never crosses {level}")
    i = idx[0]
    v0, v1 = values[i], values[i + 1]
    return float(x[i] + (v0 - level) / (v0 - v1) * (x[i + 1] - x[i]))


def half_level_position(profile: WaveProfile) -> float:
    """Coordinate where N falls through 0.5"""
    return _level_crossing(profile.xi, profile.N_vals, ANCHOR_LEVEL)


def desingularised_to_physical(traj: Trajectory, params: ModelParams) -> WaveProfile:
    """Map a desingularised trajectory to a physical profile (xi, N, M).

    Args:
        traj: Shot trajectory with states (n, p, m).
        params: Parameters of the shot; only the speed is carried into the profile.

    Returns:
        WaveProfile: Samples (xi_i, n(y_i), m(y_i)) with xi = 0 where n = 0.5.

    Raises:
        DegenerateMapError: If m >= 1 at any sample.
    """
    n = traj.states[:, 0]
    m = traj.states[:, 2]
    if np.any(m >= 1.0):
        first = int(np.argmax(m >= 1.0))
        raise DegenerateMapError(f"m reaches 1 at y={traj.ys[first]:.6g}; the coordinate change degenerates")
    # d(1 - m)/dy = -m'
    xi = cumulative_hermite_trapezoid(traj.ys, 1.0 - m, -traj.derivs[:, 2])
    try:
        y_half = _level_crossing(traj.ys, n, ANCHOR_LEVEL)
    except FrontNotFoundError:
        raise FrontNotFoundError("trajectory never crosses n = 0.5; cannot anchor the profile")
    xi_half = float(np.interp(y_half, traj.ys, xi))
    logger.debug(f"Anchored profile at y={y_half:.8g}")
    return WaveProfile(xi=xi - xi_half, N_vals=n.copy(), M_vals=m.copy(), speed=params.c, source="ODE")


def profile_from_pde(x: np.ndarray, N: np.ndarray, M: np.ndarray, speed: float,
                     front_position: Optional[float] = None) -> WaveProfile:
    """PDE snapshot in the co-moving frame xi = x - X(t)"""
    x = np.asarray(x, dtype=float)
    if front_position is None:
        front_position = _level_crossing(x, np.asarray(N, dtype=float), ANCHOR_LEVEL)
    return WaveProfile(xi=x - front_position, N_vals=N, M_vals=M, speed=speed, source="PDE")


def _left_tail(profile: WaveProfile, traj: Trajectory, params: ModelParams, xi_min: float, samples: int):
    """Linearised unstable manifold of (1, 0, 0) behind the first sample"""
    eig = saddle_eigen(params.c, params.kappa)
    gap0 = 1.0 - float(traj.states[0, 0])
    m0 = float(traj.states[0, 2])
    xi0 = float(profile.xi[0])

    def xi_of(delta):
        return xi0 + delta - m0 / eig.lambda3 * np.expm1(eig.lambda3 * delta)

    # xi - xi0 lies between delta and delta + m0 / lambda3 for delta < 0
    lo = (xi_min - xi0) - m0 / eig.lambda3 - 1.0
    delta_min = brentq(lambda d: xi_of(d) - xi_min, lo, 0.0)
    delta = np.linspace(delta_min, 0.0, samples + 1)[:-1]
    N = 1.0 - gap0 * np.exp(eig.lambda2 * delta)
    M = m0 * np.exp(eig.lambda3 * delta)
    return xi_of(delta), N, M


def _mbar_tail(profile: WaveProfile, traj: Trajectory, params: ModelParams, xi_max: float, samples: int):
    """Stable-manifold expansion at (0, 0, m_bar) beyond the last sample.

    n = sum b_i exp(nu_i d), m = m_bar + K sum (b_i / nu_i) exp(nu_i d) with
    K = kappa m_bar (1 - m_bar) / c, and dxi/dd = 1 - m.
    """
    c, kappa = params.c, params.kappa
    n_end, p_end, m_end = (float(v) for v in traj.final_state)
    xi_end = float(profile.xi[-1])
    m_bar = m_end
    for _ in range(3):
        roots = tail_eigen(c, min(max(m_bar, 0.0), 1.0 - 1e-12))
        if not roots.is_node:
            raise ComplexRootsError(f"tail at m_bar={m_bar:.6g}, c={c:.6g} spirals; no monotone extension")
        nu1, nu2 = roots.nu1, roots.nu2
        K = kappa * m_bar * (1.0 - m_bar) / c
        if abs(nu1 - nu2) <= 1e-6 * abs(nu1):
            nu = 0.5 * (nu1 + nu2)
            b1, b2 = n_end, p_end - nu * n_end
            offset = K * (b1 / nu - b2 / nu ** 2)
        else:
            b1 = (p_end - nu2 * n_end) / (nu1 - nu2)
            b2 = n_end - b1
            offset = K * (b1 / nu1 + b2 / nu2)
        m_bar = m_end - offset

    if abs(nu1 - nu2) <= 1e-6 * abs(nu1):
        a, b = K * (b1 / nu - b2 / nu ** 2), K * b2 / nu

        def fields(d):
            e = np.exp(nu * d)
            n = (b1 + b2 * d) * e
            m = m_bar + K * ((b1 + b2 * d) / nu - b2 / nu ** 2) * e
            integral = a * np.expm1(nu * d) / nu + b * (d * e / nu - np.expm1(nu * d) / nu ** 2)
            return xi_end + (1.0 - m_bar) * d - integral, n, m
    else:
        def fields(d):
            e1, e2 = np.exp(nu1 * d), np.exp(nu2 * d)
            n = b1 * e1 + b2 * e2
            m = m_bar + K * (b1 / nu1 * e1 + b2 / nu2 * e2)
            integral = K * (b1 / nu1 ** 2 * np.expm1(nu1 * d) + b2 / nu2 ** 2 * np.expm1(nu2 * d))
            return xi_end + (1.0 - m_bar) * d - integral, n, m

    hi = (xi_max - xi_end) / (1.0 - m_bar) + 1.0
    for _ in range(60):
        if fields(hi)[0] >= xi_max:
            break
        hi *= 2.0
    else:
        raise DomainError(f"tail expansion cannot reach xi={xi_max:.6g}")
    delta_max = brentq(lambda d: fields(d)[0] - xi_max, 0.0, hi)
    delta = np.linspace(0.0, delta_max, samples + 1)[1:]
    return fields(delta)


def _centre_tail(profile: WaveProfile, traj: Trajectory, params: ModelParams, xi_max: float, samples: int):
    """Tail near (0, 0, 1), where kappa n - (1 - m) stays close to its last value D.

    In xi the gap w = 1 - m obeys dw/dxi = -(D + w) / c and n = (D + w) / kappa;
    with D = 0 this is the centre-manifold tail 1 - m ~ c / y. For D > 0 the
    gap closes at a finite xi and n freezes at D / kappa beyond it.
    """
    c, kappa = params.c, params.kappa
    n_end, _, m_end = (float(v) for v in traj.final_state)
    xi_end = float(profile.xi[-1])
    w_end = 1.0 - m_end
    D = kappa * n_end - w_end
    xi = np.linspace(xi_end, xi_max, samples + 1)[1:]
    w = (w_end + D) * np.exp(-(xi - xi_end) / c) - D
    w = np.clip(w, 0.0, None)
    n = np.clip((D + w) / kappa, 0.0, None)
    return xi, n, 1.0 - w


def extend_profile(
    profile: WaveProfile,
    traj: Trajectory,
    params: ModelParams,
    xi_min: Optional[float] = None,
    xi_max: Optional[float] = None,
    samples: int = 200,
    m1_gap: float = 1e-3,
) -> WaveProfile:
    """Continue an ODE profile analytically past the ends of its trajectory.

    Behind the first sample the linearised unstable manifold of (1, 0, 0)
    applies. Ahead of the last sample the tail follows the stable manifold of
    (0, 0, m_bar), or the slow tail into (0, 0, 1) when the last m is within
    ``m1_gap`` of 1.

    Args:
        profile: Output of ``desingularised_to_physical`` for ``traj``.
        traj: The convergent shot the profile was built from.
        params: kappa and c of the shot.
        xi_min: Extend to the left down to this coordinate, if below the profile.
        xi_max: Extend to the right up to this coordinate, if above the profile.
        samples: Points added on each extended side.

    Raises:
        DomainError: If the profile and trajectory disagree, the shot exited,
            or the tail at m_bar is a spiral (``ComplexRootsError``).
    """
    if len(traj) != profile.xi.size:
        raise DomainError("profile and trajectory have different sample counts")
    if samples < 1:
        raise DomainError(f"samples must be positive, got {samples}")
    n_end, _, m_end = (float(v) for v in traj.final_state)
    if n_end < 0.0 or not 0.0 <= m_end < 1.0:
        raise DomainError("only convergent shots with n >= 0 and m in [0, 1] can be extended")

    xi_parts = [profile.xi]
    n_parts = [profile.N_vals]
    m_parts = [profile.M_vals]
    if xi_min is not None and xi_min < profile.xi[0]:
        xi, n, m = _left_tail(profile, traj, params, xi_min, samples)
        xi_parts.insert(0, xi)
        n_parts.insert(0, n)
        m_parts.insert(0, m)
    if xi_max is not None and xi_max > profile.xi[-1]:
        tail = _centre_tail if m_end >= 1.0 - m1_gap else _mbar_tail
        xi, n, m = tail(profile, traj, params, xi_max, samples)
        xi_parts.append(xi)
        n_parts.append(n)
        m_parts.append(m)
    logger.debug(f"Extended profile to [{xi_parts[0][0]:.6g}, {xi_parts[-1][-1]:.6g}]")
    return WaveProfile(
        xi=np.concatenate(xi_parts),
        N_vals=np.concatenate(n_parts),
        M_vals=np.concatenate(m_parts),
        speed=profile.speed,
        source=profile.source,
    )


def resample_profile(p: WaveProfile, grid: np.ndarray) -> WaveProfile:
    """Piecewise-linear resampling onto ``grid``, which must lie inside the profile's range"""
    grid = np.asarray(grid, dtype=float)
    lo, hi = p.xi[0], p.xi[-1]
    tol = 1e-12 * max(1.0, abs(lo), abs(hi))
    if grid.size == 0 or grid.min() < lo - tol or grid.max() > hi + tol:
        raise DomainError(f"resampling grid leaves the profile range [{lo:.6g}, {hi:.6g}]")
    return WaveProfile(
        xi=grid,
        N_vals=np.interp(grid, p.xi, p.N_vals),
        M_vals=np.interp(grid, p.xi, p.M_vals),
        speed=p.speed,
        source=p.source,
    )


def _sup_norms(a: WaveProfile, b: WaveProfile, shift: float):
    """Sup-norm differences of a and (b moved by shift) on their overlap"""
    b_xi = b.xi + shift
    lo = max(a.xi[0], b_xi[0])
    hi = min(a.xi[-1], b_xi[-1])
    if hi <= lo:
        return None
    points = np.concatenate([a.xi, b_xi])
    points = points[(points >= lo) & (points <= hi)]
    diff_n = np.interp(points, a.xi, a.N_vals) - np.interp(points, b_xi, b.N_vals)
    diff_m = np.interp(points, a.xi, a.M_vals) - np.interp(points, b_xi, b.M_vals)
    return float(np.max(np.abs(diff_n))), float(np.max(np.abs(diff_m)))


def compare_profiles(a: WaveProfile, b: WaveProfile, search_width: float = 5.0, shift_tol: float = 1e-3) -> dict:
    """Align two profiles by translation and report the sup-norm differences.

    The shift applied to ``b`` minimises the sup-norm of the N difference.
    The search starts from the offset of the two half-level points and uses
    bounded Brent (golden-section plus parabolic) minimisation.

    Returns:
        dict: ``sup_norm_N``, ``sup_norm_M`` and ``optimal_shift``.

    Raises:
        DomainError: If the profiles cannot be made to overlap.
    """
    try:
        guess = half_level_position(a) - half_level_position(b)
    except FrontNotFoundError:
        guess = 0.0
    if _sup_norms(a, b, guess) is None:
        raise DomainError("profiles do not overlap")

    def objective(shift: float) -> float:
        norms = _sup_norms(a, b, shift)
        return 2.0 if norms is None else norms[0]

    res = minimize_scalar(
        objective,
        bounds=(guess - search_width, guess + search_width),
        method="bounded",
        options={"xatol": shift_tol},
    )
    shift = float(res.x)
    if objective(guess) <= res.fun:
        shift = guess
    sup_n, sup_m = _sup_norms(a, b, shift)
    logger.debug(f"Profiles aligned with shift {shift:.6g}: |dN|={sup_n:.3g}, |dM|={sup_m:.3g}")
    return {"sup_norm_N": sup_n, "sup_norm_M": sup_m, "optimal_shift": shift}
