# degenwave/conjecture_lab.py

"""Numerical audit of the minimal-speed conjecture through the phase-plane problem.

With n as the independent variable and P(n) = n'(y), the wave solves

    P' = -c - (1 - n) n (1 - M) / P,    M' = (kappa / c) M (1 - M) n / P,

with P(0) = 0, M(0) = m_bar, P(1) = M(1) = 0. Along the solution the effective
reaction term g(n) = (1 - n) n (1 - M(n)) satisfies
g''(n) = -2 (1 - M) (1 - H(n)). The conjecture's sufficient conditions are read
off g and H: g of Fisher-KPP type, H(0) < 1, H < 1 everywhere, H non-increasing.
"""
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ComplexRootsError, DegenwaveError, DomainError, IntegrationError, SingularSlopeError
from .ode_integrator import EventSpec, integrate

logger = logging.getLogger(__name__)

BRANCHES = ("minus", "plus")
DEFAULT_N_TOL = 1e-6
SINGULAR_MARGIN = 1e-3
FLAG_TOL = 1e-9


@dataclass
class PhasePlaneSolution:
    """Forward-integrated solution (P(n), M(n)) of the phase-plane problem.

    Attributes:
        n_samples (np.ndarray): Increasing grid in [n_tol, n_end].
        P_vals (np.ndarray): Slopes P(n) <= 0.
        M_vals (np.ndarray): ECM density M(n) in [0, m_bar].
        Q_vals (np.ndarray): Accumulated quadrature int_0^n q / (-P(q)) dq.
        branch (str): Root of P'(0) used for the seed, ``minus`` or ``plus``.
        c, kappa, m_bar (float): Parameters.
        p_prime0 (float): The seeding slope P'(0).
        endpoint_residual (Tuple[float, float]): (P, M) at the last sample, which
            would be (0, 0) for an exact solution of the boundary problem at n = 1.
        truncated (bool): True if P vanished just short of n = 1.
    """
    n_samples: np.ndarray
    P_vals: np.ndarray
    M_vals: np.ndarray
    Q_vals: np.ndarray
    branch: str
    c: float
    kappa: float
    m_bar: float
    p_prime0: float
    endpoint_residual: Tuple[float, float] = (0.0, 0.0)
    truncated: bool = False

    def closed_form_M(self) -> np.ndarray:
        """M(n) = m_bar / (m_bar + (1 - m_bar) exp((kappa / c) Q(n)))"""
        if self.m_bar == 0.0:
            return np.zeros_like(self.n_samples)
        return self.m_bar / (self.m_bar + (1.0 - self.m_bar) * np.exp((self.kappa / self.c) * self.Q_vals))


@dataclass
class ReactionDiagnostics:
    """g, its derivatives and H sampled on the solution grid"""
    n: np.ndarray
    g: np.ndarray
    g_prime: np.ndarray
    g_double_prime: np.ndarray
    H: np.ndarray
    g_prime_at_0: float
    H_at_0: float
    identity_residual: float


@dataclass
class ScanVerdict:
    """Sign conditions for one (kappa, m_bar) cell of a conjecture scan"""
    kappa: float
    m_bar: float
    c: float
    branch: str
    g_kpp: Optional[bool] = None
    H0_lt_1: Optional[bool] = None
    H_lt_1: Optional[bool] = None
    H_monotone: Optional[bool] = None
    gdd_neg: Optional[bool] = None
    status: str = "ok"
    details: Dict[str, float] = field(default_factory=dict)


def p_prime_zero(c: float, m_bar: float) -> Tuple[float, float]:
    """Both roots (-c -/+ sqrt(c^2 - 4 (1 - m_bar))) / 2 of the slope at n = 0.

    A discriminant within rounding of zero is treated as a double root.

    Raises:
        ComplexRootsError: If c < 2 sqrt(1 - m_bar).
    """
    if not c > 0:
        raise DomainError(f"c must be positive, got {c}")
    if not 0.0 <= m_bar < 1.0:
        raise DomainError(f"m_bar must lie in [0, 1), got {m_bar}")
    disc = c * c - 4.0 * (1.0 - m_bar)
    if disc < 0.0:
        if disc > -1e-12 * c * c:
            disc = 0.0
        else:
            raise ComplexRootsError(
                f"c={c:.8g} is below 2 sqrt(1 - m_bar) = {2.0 * math.sqrt(1.0 - m_bar):.8g}"
            )
    root = math.sqrt(disc)
    return (-c - root) / 2.0, (-c + root) / 2.0


def _phase_plane_rhs(c: float, kappa: float):
    rate = kappa / c

    def rhs(n: float, state: np.ndarray) -> np.ndarray:
        P, M, _ = state
        return np.array([
            -c - (1.0 - n) * n * (1.0 - M) / P,
            rate * M * (1.0 - M) * n / P,
            -n / P,
        ])

    return rhs


def integrate_phase_plane(
    c: float,
    kappa: float,
    m_bar: float,
    branch: str = "plus",
    n_tol: float = DEFAULT_N_TOL,
    samples: Optional[int] = None,
    rel_tol: float = 1e-10,
    abs_tol: float = 1e-13,
) -> PhasePlaneSolution:
    """Integrate (P, M) forward in n from the regularised start n = n_tol.

    The seed is P = P'(0) n_tol, M from the closed form with
    Q(n_tol) = n_tol / (-P'(0)). Integration runs to 1 - n_tol while the
    quadrature Q is carried as a third component.

    Args:
        samples: If given, the solution is returned on that many uniformly spaced
            points using the integrator's dense output instead of its own steps.

    Raises:
        SingularSlopeError: If P reaches zero before 1 - SINGULAR_MARGIN.
    """
    if branch not in BRANCHES:
        raise DomainError(f"branch must be one of {BRANCHES}, got '{branch}'")
    if not kappa > 0:
        raise DomainError(f"kappa must be positive, got {kappa}")
    if not 0.0 < n_tol < 0.1:
        raise DomainError(f"n_tol must lie in (0, 0.1), got {n_tol}")
    roots = p_prime_zero(c, m_bar)
    slope0 = roots[0] if branch == "minus" else roots[1]
    if slope0 == 0.0:
        raise DomainError("P'(0) vanishes; the seed is degenerate")

    Q0 = n_tol / -slope0
    M0 = 0.0 if m_bar == 0.0 else m_bar / (m_bar + (1.0 - m_bar) * math.exp((kappa / c) * Q0))
    state0 = np.array([slope0 * n_tol, M0, Q0])
    floor = 1e-3 * abs(slope0) * n_tol
    events = [EventSpec("slope_zero", lambda n, s: s[0] + floor, direction=1, terminal=True)]
    try:
        traj = integrate(
            _phase_plane_rhs(c, kappa), n_tol, state0, 1.0 - n_tol,
            rel_tol=rel_tol, abs_tol=abs_tol, events=events,
        )
        stopped_at = None if traj.terminal_event is None else traj.terminal_event.location
    except IntegrationError as e:
        # 1/P blows up faster than the step control can follow
        if e.partial is None or len(e.partial) < 2:
            raise
        traj = e.partial
        stopped_at = traj.final_y

    truncated = False
    if stopped_at is not None:
        location = stopped_at
        if location < 1.0 - SINGULAR_MARGIN:
            raise SingularSlopeError(
                f"P vanishes at n={location:.6g} for c={c}, kappa={kappa}, m_bar={m_bar}, branch={branch}",
                location=location,
            )
        truncated = True
        logger.debug(f"P reached zero at n={location:.8g}, next to the saddle")

    n_vals, states = traj.ys, traj.states
    if samples is not None:
        if samples < 2:
            raise DomainError(f"samples must be at least 2, got {samples}")
        n_vals = np.linspace(traj.ys[0], traj.ys[-1], samples)
        states = traj.dense()(n_vals)

    return PhasePlaneSolution(
        n_samples=n_vals, P_vals=states[:, 0], M_vals=states[:, 1], Q_vals=states[:, 2],
        branch=branch, c=c, kappa=kappa, m_bar=m_bar, p_prime0=slope0,
        endpoint_residual=(float(traj.states[-1, 0]), float(traj.states[-1, 1])),
        truncated=truncated,
    )


def h_at_zero(c: float, kappa: float, m_bar: float, branch: str = "plus") -> float:
    """H(0) = -m_bar (kappa / c) / P'(0)"""
    roots = p_prime_zero(c, m_bar)
    slope0 = roots[0] if branch == "minus" else roots[1]
    return -m_bar * (kappa / c) / slope0


def reaction_diagnostics(sol: PhasePlaneSolution) -> ReactionDiagnostics:
    """Evaluate g, g', g'' and H on the solution samples.

    M' and P' come from the differential equations, so nothing is finite-differenced
    except g'(0), which is the one-sided quotient g(n_tol) / n_tol.
    """
    n, P, M = sol.n_samples, sol.P_vals, sol.M_vals
    k = sol.kappa / sol.c
    s = (1.0 - n) * n
    ratio = n / P
    dP = -sol.c - s * (1.0 - M) / P
    dM = k * M * (1.0 - M) * ratio

    g = s * (1.0 - M)
    g_prime = (1.0 - 2.0 * n) * (1.0 - M) - s * dM
    g_double_prime = (
        -2.0 * (1.0 - M)
        - 2.0 * (1.0 - 2.0 * n) * (1.0 - M) * M * k * ratio
        - s * (1.0 - M) * M * k * (
            k * ratio ** 2 * (1.0 - 2.0 * M)
            + 1.0 / P
            + (n / P ** 2) * (sol.c + s * (1.0 - M) / P)
        )
    )
    bracket = k * ratio ** 2 * (1.0 - 2.0 * M) + 1.0 / P - n * dP / P ** 2
    H = -k * M * ((1.0 - 2.0 * n) * ratio + 0.5 * s * bracket)

    factored = -2.0 * (1.0 - M) * (1.0 - H)
    scale = np.maximum(1.0, np.abs(g_double_prime))
    identity_residual = float(np.max(np.abs(g_double_prime - factored) / scale))

    return ReactionDiagnostics(
        n=n, g=g, g_prime=g_prime, g_double_prime=g_double_prime, H=H,
        g_prime_at_0=float(g[0] / n[0]),
        H_at_0=-sol.m_bar * k / sol.p_prime0,
        identity_residual=identity_residual,
    )


def default_speed_rule(kappa: float, m_bar: float) -> float:
    """Test speed 2 sqrt(1 - m_bar)"""
    return 2.0 * math.sqrt(1.0 - m_bar)


def scan_cell(args) -> ScanVerdict:
    kappa, m_bar, c, branch, samples = args
    verdict = ScanVerdict(kappa=kappa, m_bar=m_bar, c=c, branch=branch)
    try:
        H0 = h_at_zero(c, kappa, m_bar, branch)
        verdict.H0_lt_1 = bool(H0 < 1.0 - FLAG_TOL)
        verdict.details["H_at_0"] = H0
        sol = integrate_phase_plane(c, kappa, m_bar, branch, samples=samples)
        diag = reaction_diagnostics(sol)
    except DegenwaveError as e:
        logger.warning(f"Conjecture cell kappa={kappa}, m_bar={m_bar} indeterminate: {e}")
        verdict.status = "indeterminate"
        return verdict

    verdict.g_kpp = bool(np.all(diag.g > 0.0))
    verdict.H_lt_1 = bool(np.all(diag.H < 1.0 + FLAG_TOL))
    verdict.H_monotone = bool(np.all(np.diff(diag.H) <= FLAG_TOL))
    verdict.gdd_neg = bool(np.all(diag.g_double_prime < FLAG_TOL))
    verdict.details.update({
        "g_prime_at_0": diag.g_prime_at_0,
        "P_end": sol.endpoint_residual[0],
        "M_end": sol.endpoint_residual[1],
        "identity_residual": diag.identity_residual,
    })
    return verdict


def conjecture_scan(
    kappa_grid: Sequence[float],
    m_bar_grid: Sequence[float],
    c_rule: Callable[[float, float], float] = default_speed_rule,
    branch: str = "plus",
    samples: int = 1000,
    workers: int = 1,
) -> List[ScanVerdict]:
    """Check the conjecture's sign conditions on every (kappa, m_bar) cell, kappa-major.

    Cells that fail to integrate are reported with status ``indeterminate``.
    ``c_rule`` must be picklable when ``workers > 1``.
    """
    if len(kappa_grid) == 0 or len(m_bar_grid) == 0:
        raise DomainError("kappa_grid and m_bar_grid must be non-empty")
    if samples < 1000:
        raise DomainError(f"at least 1000 samples are needed per cell, got {samples}")
    cells = [
        (float(kappa), float(m_bar), float(c_rule(kappa, m_bar)), branch, samples)
        for kappa in kappa_grid for m_bar in m_bar_grid
    ]
    logger.info(f"Conjecture scan over {len(cells)} cells, branch={branch}")
    if workers <= 1 or len(cells) == 1:
        return [scan_cell(cell) for cell in cells]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(scan_cell, cells))
