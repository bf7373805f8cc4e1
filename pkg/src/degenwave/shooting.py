# degenwave/shooting.py

"""Shooting from the saddle (1, 0, 0) of the desingularised travelling-wave system.

A shot leaves the saddle along its two-dimensional unstable manifold. The
manifold is parametrised by the amplitude alpha of the m component. Each shot
ends in one of three ways:
- n crosses zero at a finite T: ExitedNegativeN
- it converges to (0, 0, m_inf) with m_inf < 1: ConvergedToMbar
- it converges to (n_inf, 0, 1): ConvergedToM1

The outcome is monotone in alpha. Bisection over alpha therefore locates
alpha0(c), alpha1(c) and alpha_mbar(c), and bisection over c locates the
minimal wave speed.
"""
import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import (
    BelowMinimalSpeedError,
    DomainError,
    InsufficientDataError,
    IntegrationError,
    NoBracketError,
)
from .model_core import ModelParams, SpeedBound, min_wave_speed_formula, saddle_eigen, tail_eigen
from .ode_integrator import EventHit, EventSpec, Trajectory, desingularised_system, integrate, saddle_chart_system
from .utils import cumulative_hermite_trapezoid

logger = logging.getLogger(__name__)

# n level below which a shot leaves the (1 - n, p, m) chart
SADDLE_CHART_EXIT = 0.5
SEED_CHECK_TOL = 1e-5


class ShootKind(str, Enum):
    """Fate of a shot"""
    EXITED_NEGATIVE_N = "ExitedNegativeN"
    CONVERGED_TO_MBAR = "ConvergedToMbar"
    CONVERGED_TO_M1 = "ConvergedToM1"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class ShootConfig:
    """Numerical settings of a shot.

    Attributes:
        seed_epsilon (float): Amplitude at which the unstable-manifold expansion is truncated.
        y_max (float): Integration horizon, doubled up to ``max_doublings`` times on Inconclusive.
        conv_tol (float): Max-norm of the right-hand side below which a state counts as converged.
        dwell (float): Length in y over which ``conv_tol`` must hold.
        exit_tol (float): A shot exits once n < -exit_tol.
        m1_tol (float): Limits with m_inf >= 1 - m1_tol are classified ConvergedToM1.
        mbar_tol (float): Target accuracy of m_inf when solving for a far-field density.
        rel_tol (float): Relative tolerance of the integrator.
        abs_tol (float): Absolute tolerance of the integrator.
        max_doublings (int): Horizon doublings allowed on Inconclusive.
        max_bracket_doublings (int): Doublings allowed while expanding an alpha bracket.
    """
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
    max_bracket_doublings: int = 60

    def __post_init__(self):
        if not 0.0 < self.seed_epsilon <= 1e-4:
            raise DomainError(f"seed_epsilon must lie in (0, 1e-4], got {self.seed_epsilon}")
        if not self.y_max > 0:
            raise DomainError(f"y_max must be positive, got {self.y_max}")
        for name in ("conv_tol", "dwell", "exit_tol", "m1_tol", "mbar_tol", "rel_tol", "abs_tol"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive, got {getattr(self, name)}")
        if self.max_doublings < 0 or self.max_bracket_doublings < 1:
            raise DomainError("doubling limits must be non-negative")


@dataclass
class ShootOutcome:
    """Classified result of one shot.

    Attributes:
        kind (ShootKind): Fate of the shot.
        T (float): First zero of n, or ``math.inf`` if n stays positive.
        n_inf, p_inf, m_inf (float): Final state; the measured limits for convergent kinds.
        trajectory (Trajectory): The computed trajectory.
        alpha, c, kappa (float): Inputs of the shot.
        confined (bool): Whether every sample with n > 0 stayed in 0 < n < 1, p < 0, 0 <= m < 1.
    """
    kind: ShootKind
    T: float
    n_inf: float
    p_inf: float
    m_inf: float
    trajectory: Trajectory
    alpha: float
    c: float
    kappa: float
    confined: bool = True

    @property
    def converged(self) -> bool:
        return self.kind in (ShootKind.CONVERGED_TO_MBAR, ShootKind.CONVERGED_TO_M1)


@dataclass(frozen=True)
class AlphaBracket:
    """Result of an alpha bisection: ``value`` is the midpoint of [lower, upper]"""
    value: float
    lower: float
    upper: float

    @property
    def width(self) -> float:
        return self.upper - self.lower


@dataclass(frozen=True)
class SeedCheck:
    """alpha1 computed at the configured seed amplitude and at half of it"""
    bracket: AlphaBracket
    alpha1_half_seed: float
    difference: float
    tolerance: float

    @property
    def alpha1(self) -> float:
        return self.bracket.value

    @property
    def passed(self) -> bool:
        return self.difference < self.tolerance


@dataclass
class MbarSearchResult:
    """Shooting parameter that reaches the far-field density m_bar"""
    alpha: float
    lower: float
    upper: float
    outcome: ShootOutcome


@dataclass
class MinSpeedResult:
    """Minimal wave speed, from the closed form or from bisection over c.

    Attributes:
        c_star (float): Reported minimal speed.
        lower, upper (float): Bracket; equal to c_star for the formula branch.
        method (str): ``formula`` or ``bisection``.
        formula (SpeedBound): Closed-form value or interval for comparison.
        agrees_with_formula (Optional[bool]): Set when both are available.
    """
    c_star: float
    lower: float
    upper: float
    method: str
    formula: SpeedBound
    agrees_with_formula: Optional[bool] = None


@dataclass
class TailReport:
    """Fit of the approach to the limit state.

    For ConvergedToM1 the amplitudes of n ~ A_n / y and 1 - m ~ A_m / y are fitted
    on the last decade of y. For ConvergedToMbar the exponential rate of
    m_inf - m(y) is fitted and compared with nu1.
    """
    kind: ShootKind
    samples: int
    n_amplitude: Optional[float] = None
    n_expected: Optional[float] = None
    m_amplitude: Optional[float] = None
    m_expected: Optional[float] = None
    fitted_rate: Optional[float] = None
    expected_rate: Optional[float] = None
    residuals: dict = field(default_factory=dict)


def seed_state(alpha: float, c: float, kappa: float, cfg: ShootConfig = ShootConfig()) -> Tuple[float, np.ndarray]:
    """First-order point on the unstable manifold of (1, 0, 0).

    y0 is chosen so that max(exp(lambda2 y0), alpha exp(lambda3 y0)) equals
    ``cfg.seed_epsilon``.

    Returns:
        (y0, state) with state = (1 - e^{lambda2 y0}, -lambda2 e^{lambda2 y0}, alpha e^{lambda3 y0}).
    """
    if alpha < 0:
        raise DomainError(f"alpha must be non-negative, got {alpha}")
    eig = saddle_eigen(c, kappa)
    log_eps = math.log(cfg.seed_epsilon)
    y0 = log_eps / eig.lambda2
    if alpha > 0:
        y0 = min(y0, (log_eps - math.log(alpha)) / eig.lambda3)
    growth = math.exp(eig.lambda2 * y0)
    state = np.array([1.0 - growth, -eig.lambda2 * growth, alpha * math.exp(eig.lambda3 * y0)])
    return y0, state


def in_domain_d1(state: Sequence[float], tol: float = 1e-9) -> bool:
    """Whether a state lies in the region 0 < n < 1, p < 0, 0 <= m < 1, up to tol"""
    n, p, m = state
    return -tol < n < 1.0 + tol and p < tol and -tol <= m < 1.0 + tol


class _DwellMonitor:
    """Stops integration once the rhs stays below conv_tol over a dwell interval"""

    def __init__(self, cfg: ShootConfig):
        self.cfg = cfg
        self.left_seed = False
        self.since: Optional[float] = None

    def __call__(self, y: float, state: np.ndarray, deriv: np.ndarray) -> Optional[str]:
        if not self.left_seed:
            # The seed itself sits near an equilibrium.
            margin = 1e3 * self.cfg.seed_epsilon
            self.left_seed = (1.0 - state[0]) > margin or state[2] > margin
            return None
        if np.max(np.abs(deriv)) < self.cfg.conv_tol:
            if self.since is None:
                self.since = y
            elif y - self.since >= self.cfg.dwell:
                return "converged"
        else:
            self.since = None
        return None


def _confined(traj: Trajectory, tol: float = 1e-9) -> bool:
    states = traj.states
    positive = states[:, 0] > 0
    n, p, m = states[positive, 0], states[positive, 1], states[positive, 2]
    return bool(np.all(n < 1.0 + tol) and np.all(p < tol) and np.all(m >= -tol) and np.all(m < 1.0 + tol))


def _concat(first: Optional[Trajectory], second: Trajectory) -> Trajectory:
    if first is None:
        return second
    return Trajectory(
        ys=np.concatenate([first.ys, second.ys[1:]]),
        states=np.concatenate([first.states, second.states[1:]]),
        derivs=np.concatenate([first.derivs, second.derivs[1:]]),
        terminal_event=second.terminal_event,
        event_hits=first.event_hits + second.event_hits,
    )


def _flip_n(states: np.ndarray) -> np.ndarray:
    """Swap the first component between n and u = 1 - n"""
    out = np.array(states, dtype=float)
    out[..., 0] = 1.0 - out[..., 0]
    return out


def _flip_deriv(derivs: np.ndarray) -> np.ndarray:
    out = np.array(derivs, dtype=float)
    out[..., 0] = -out[..., 0]
    return out


def _from_saddle_chart(traj: Trajectory) -> Trajectory:
    """Trajectory in (1 - n, p, m) rewritten in (n, p, m)"""
    terminal = traj.terminal_event
    if terminal is not None:
        terminal = EventHit(id=terminal.id, location=terminal.location, state=_flip_n(terminal.state))
    return Trajectory(
        ys=traj.ys,
        states=_flip_n(traj.states),
        derivs=_flip_deriv(traj.derivs),
        terminal_event=terminal,
        event_hits=[EventHit(id=h.id, location=h.location, state=_flip_n(h.state)) for h in traj.event_hits],
    )


def classify_trajectory(alpha: float, c: float, kappa: float, cfg: ShootConfig = ShootConfig()) -> ShootOutcome:
    """Shoot from the saddle with amplitude alpha and classify the fate of the orbit.

    Until n drops to ``SADDLE_CHART_EXIT`` the shot is integrated in
    u = 1 - n with a purely relative tolerance, so the seed's distance from the
    saddle is resolved to ``cfg.rel_tol``; the rest runs in (n, p, m).

    Args:
        alpha: Amplitude of the m component on the unstable manifold (0 gives the
            Fisher-KPP reduction).
        c: Wave speed.
        kappa: Degradation rate.
        cfg: Numerical settings.

    Returns:
        ShootOutcome: ExitedNegativeN with T at the zero of n; ConvergedToMbar or
        ConvergedToM1 when the rhs stays below ``cfg.conv_tol`` for ``cfg.dwell``;
        Inconclusive if the horizon is exhausted after all doublings.

    Raises:
        IntegrationError: If the integrator fails.
    """
    rhs = desingularised_system(c, kappa)
    chart_rhs = saddle_chart_system(c, kappa)
    y0, state0 = seed_state(alpha, c, kappa, cfg)
    events = [
        EventSpec("n_zero", lambda y, s: s[0], direction=-1, terminal=False),
        EventSpec("exit", lambda y, s: s[0] + cfg.exit_tol, direction=-1, terminal=True),
    ]
    chart_events = [EventSpec("leave_saddle", lambda y, s: s[0] - (1.0 - SADDLE_CHART_EXIT), direction=1)]
    chart_abs_tol = cfg.abs_tol * cfg.seed_epsilon
    monitor = _DwellMonitor(cfg)

    def chart_monitor(y: float, state: np.ndarray, deriv: np.ndarray) -> Optional[str]:
        return monitor(y, _flip_n(state), _flip_deriv(deriv))

    def piece(start_y: float, start_state: np.ndarray, horizon: float, near_saddle: bool) -> Trajectory:
        if not near_saddle:
            return integrate(
                rhs, start_y, start_state, horizon,
                rel_tol=cfg.rel_tol, abs_tol=cfg.abs_tol, events=events, monitor=monitor,
            )
        try:
            chart = integrate(
                chart_rhs, start_y, _flip_n(start_state), horizon,
                rel_tol=cfg.rel_tol, abs_tol=chart_abs_tol, events=chart_events, monitor=chart_monitor,
            )
        except IntegrationError as e:
            if isinstance(e.partial, Trajectory) and len(e.partial) > 0:
                e.partial = _from_saddle_chart(e.partial)
            raise
        return _from_saddle_chart(chart)

    traj: Optional[Trajectory] = None
    near_saddle = True
    start_y, start_state = y0, state0
    horizon = max(cfg.y_max, y0 + 1.0)
    for attempt in range(cfg.max_doublings + 1):
        while True:
            try:
                segment = piece(start_y, start_state, horizon, near_saddle)
            except IntegrationError as e:
                if isinstance(e.partial, Trajectory) and len(e.partial) > 0:
                    e.partial = _concat(traj, e.partial)
                raise
            traj = _concat(traj, segment)
            if near_saddle and traj.terminal_event is not None and traj.terminal_event.id == "leave_saddle":
                near_saddle = False
                traj.terminal_event = None
                start_y, start_state = traj.final_y, traj.final_state
                if start_y < horizon:
                    continue
            break
        if traj.terminal_event is not None:
            break
        logger.debug(f"Shot alpha={alpha:.10g} c={c:.6g} undecided at y={horizon:.6g}; doubling horizon")
        start_y, start_state = traj.final_y, traj.final_state
        horizon *= 2.0

    n_inf, p_inf, m_inf = (float(v) for v in traj.final_state)
    zeros = [hit.location for hit in traj.event_hits if hit.id == "n_zero"]
    T = math.inf
    event = traj.terminal_event
    if event is None:
        kind = ShootKind.INCONCLUSIVE
        logger.warning(f"Shot alpha={alpha:.10g} c={c:.6g} kappa={kappa:.6g} inconclusive at y={traj.final_y:.6g}")
    elif event.id == "exit":
        kind = ShootKind.EXITED_NEGATIVE_N
        T = zeros[0] if zeros else event.location
    elif m_inf >= 1.0 - cfg.m1_tol:
        kind = ShootKind.CONVERGED_TO_M1
    else:
        kind = ShootKind.CONVERGED_TO_MBAR

    logger.debug(f"Shot alpha={alpha:.10g} c={c:.6g} kappa={kappa:.6g} -> {kind.value} (m={m_inf:.8g})")
    return ShootOutcome(
        kind=kind, T=T, n_inf=n_inf, p_inf=p_inf, m_inf=m_inf, trajectory=traj,
        alpha=alpha, c=c, kappa=kappa, confined=_confined(traj),
    )


def scan_alpha(alphas: Sequence[float], c: float, kappa: float, cfg: ShootConfig = ShootConfig()) -> List[ShootOutcome]:
    """Classify a list of shots at fixed (c, kappa), in input order"""
    return [classify_trajectory(float(a), c, kappa, cfg) for a in alphas]


def _expand_upper(predicate: Callable[[float], bool], start: float, max_doublings: int) -> float:
    hi = start
    for _ in range(max_doublings):
        if predicate(hi):
            return hi
        hi *= 2.0
    raise NoBracketError(f"no bracket found after {max_doublings} doublings (last alpha={hi:.6g})")


def _bisect(predicate: Callable[[float], bool], lo: float, hi: float, rel_width: float = 1e-6) -> Tuple[float, float]:
    """Shrink [lo, hi] with predicate(lo) False and predicate(hi) True"""
    while hi - lo >= rel_width * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if predicate(mid):
            hi = mid
        else:
            lo = mid
    return lo, hi


def find_alpha0(c: float, kappa: float, cfg: ShootConfig = ShootConfig()) -> AlphaBracket:
    """Smallest alpha whose shot does not exit through n = 0.

    Zero for c >= 2; otherwise found by bisection on [kind != ExitedNegativeN].
    """
    if not c > 0:
        raise DomainError(f"c must be positive, got {c}")
    if c >= 2.0:
        return AlphaBracket(value=0.0, lower=0.0, upper=0.0)

    def stays_positive(alpha: float) -> bool:
        return classify_trajectory(alpha, c, kappa, cfg).kind != ShootKind.EXITED_NEGATIVE_N

    logger.info(f"Searching alpha0 for c={c}, kappa={kappa}")
    hi = _expand_upper(stays_positive, 1.0, cfg.max_bracket_doublings)
    lo, hi = _bisect(stays_positive, 0.0, hi)
    result = AlphaBracket(value=0.5 * (lo + hi), lower=lo, upper=hi)
    logger.info(f"alpha0({c}) = {result.value:.8g} in [{lo:.10g}, {hi:.10g}]")
    return result


def _reaches_m1(outcome: ShootOutcome, cfg: ShootConfig) -> bool:
    if outcome.kind == ShootKind.CONVERGED_TO_M1:
        return True
    return outcome.kind == ShootKind.INCONCLUSIVE and outcome.m_inf >= 1.0 - cfg.m1_tol


def find_alpha1(
    c: float,
    kappa: float,
    cfg: ShootConfig = ShootConfig(),
    bracket_hint: Optional[Tuple[float, float]] = None,
) -> AlphaBracket:
    """Smallest alpha whose shot converges to (n_inf, 0, 1).

    Args:
        c: Wave speed.
        kappa: Degradation rate.
        cfg: Numerical settings.
        bracket_hint: Optional (lower, upper) guess; ignored if it does not bracket.

    Returns:
        AlphaBracket: Bracket of width below 1e-6 max(1, alpha).

    Raises:
        NoBracketError: If no alpha reaching m = 1 is found within the allowed doublings.
    """
    if not c > 0:
        raise DomainError(f"c must be positive, got {c}")

    def reaches_m1(alpha: float) -> bool:
        return _reaches_m1(classify_trajectory(alpha, c, kappa, cfg), cfg)

    logger.info(f"Searching alpha1 for c={c}, kappa={kappa}")
    lo, hi = 0.0, None
    if bracket_hint is not None:
        hint_lo, hint_hi = bracket_hint
        if 0.0 <= hint_lo < hint_hi and not reaches_m1(hint_lo) and reaches_m1(hint_hi):
            lo, hi = hint_lo, hint_hi
        else:
            logger.warning(f"Bracket hint {bracket_hint} does not bracket alpha1; expanding from 1")
    if hi is None:
        hi = _expand_upper(reaches_m1, 1.0, cfg.max_bracket_doublings)
    lo, hi = _bisect(reaches_m1, lo, hi)
    result = AlphaBracket(value=0.5 * (lo + hi), lower=lo, upper=hi)
    logger.info(f"alpha1({c}) = {result.value:.8g} in [{lo:.10g}, {hi:.10g}]")
    return result


def seed_robustness(
    c: float,
    kappa: float,
    cfg: ShootConfig = ShootConfig(),
    tolerance: float = SEED_CHECK_TOL,
) -> SeedCheck:
    """Repeat the alpha1 search with half the seed amplitude and compare.

    A truncated seed is only trustworthy if alpha1 does not move when the
    seed is taken closer to the saddle.
    """
    full = find_alpha1(c, kappa, cfg)
    margin = max(1e-3, 10.0 * full.width)
    half = find_alpha1(
        c, kappa, replace(cfg, seed_epsilon=0.5 * cfg.seed_epsilon),
        bracket_hint=(max(0.0, full.lower - margin), full.upper + margin),
    )
    check = SeedCheck(
        bracket=full,
        alpha1_half_seed=half.value,
        difference=abs(full.value - half.value),
        tolerance=tolerance,
    )
    if check.passed:
        logger.info(f"Seed check at c={c}: alpha1 moves by {check.difference:.3g} when the seed is halved")
    else:
        logger.warning(
            f"Seed check failed at c={c}, kappa={kappa}: alpha1 moves by {check.difference:.3g} "
            f"(tolerance {tolerance:.3g}) when seed_epsilon is halved"
        )
    return check


def _beyond_centre_manifold(outcome: ShootOutcome, kappa: float) -> bool:
    # Near (0, 0, 1) orbits keep kappa n - (1 - m) roughly constant; the sign says where they end.
    if outcome.kind == ShootKind.EXITED_NEGATIVE_N:
        return False
    return kappa * outcome.n_inf > 1.0 - outcome.m_inf


def centre_manifold_shot(
    c: float,
    kappa: float,
    cfg: ShootConfig = ShootConfig(),
    bracket_hint: Optional[Tuple[float, float]] = None,
    rel_width: float = 1e-12,
) -> ShootOutcome:
    """Shot that reaches (0, 0, 1) along the centre manifold, n ~ c/(kappa y) and 1 - m ~ c/y.

    Shots above the alpha1 orbit stall at (n_inf, 0, 1) with n_inf > 0, shots
    below it end on (0, 0, m_bar) with m_bar < 1. Bisecting on that split to
    ``rel_width`` leaves a shot that follows the centre manifold well past the
    integration horizon. The m = 1 - m1_tol split used by ``find_alpha1`` stops
    short of that orbit, so its brackets do not follow the algebraic tail.
    """
    if not c > 0:
        raise DomainError(f"c must be positive, got {c}")

    def beyond(alpha: float) -> bool:
        return _beyond_centre_manifold(classify_trajectory(alpha, c, kappa, cfg), kappa)

    lo, hi = 0.0, None
    if bracket_hint is not None:
        hint_lo, hint_hi = bracket_hint
        if 0.0 <= hint_lo < hint_hi and not beyond(hint_lo) and beyond(hint_hi):
            lo, hi = hint_lo, hint_hi
    if hi is None:
        hi = _expand_upper(beyond, 1.0, cfg.max_bracket_doublings)
    lo, hi = _bisect(beyond, lo, hi, rel_width)
    logger.info(f"Centre-manifold orbit at c={c}, kappa={kappa}: alpha in [{lo:.15g}, {hi:.15g}]")
    return classify_trajectory(hi, c, kappa, cfg)


def find_alpha_for_mbar(c: float, kappa: float, m_bar: float, cfg: ShootConfig = ShootConfig()) -> MbarSearchResult:
    """Shooting parameter whose orbit converges to (0, 0, m_bar).

    The map alpha -> m_inf is continuous and strictly increasing between alpha0(c)
    and alpha1(c); exits lie below that interval and convergence to m = 1 above it.
    Bisection therefore runs on [0, alpha_hi] with a three-way comparison.

    Raises:
        BelowMinimalSpeedError: If c < 2 sqrt(1 - m_bar) or the bracket collapses
            without reaching m_bar (the map jumps over the target).
    """
    if not 0.0 < m_bar < 1.0:
        raise DomainError(f"m_bar must lie in (0, 1), got {m_bar}")
    if not c > 0:
        raise DomainError(f"c must be positive, got {c}")
    lower_bound = 2.0 * math.sqrt(1.0 - m_bar)
    if c < lower_bound * (1.0 - 1e-12):
        raise BelowMinimalSpeedError(
            f"c={c:.8g} is below 2 sqrt(1 - m_bar) = {lower_bound:.8g}; tails oscillate"
        )

    def above(outcome: ShootOutcome) -> bool:
        if outcome.kind == ShootKind.EXITED_NEGATIVE_N:
            return False
        if outcome.kind == ShootKind.CONVERGED_TO_M1:
            return True
        return outcome.m_inf > m_bar

    hi = _expand_upper(lambda a: above(classify_trajectory(a, c, kappa, cfg)), 1.0, cfg.max_bracket_doublings)
    lo = 0.0
    best: Optional[ShootOutcome] = None
    while hi - lo > 1e-13 * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        outcome = classify_trajectory(mid, c, kappa, cfg)
        if outcome.kind == ShootKind.CONVERGED_TO_MBAR:
            if best is None or abs(outcome.m_inf - m_bar) < abs(best.m_inf - m_bar):
                best = outcome
            if abs(outcome.m_inf - m_bar) < cfg.mbar_tol:
                logger.info(f"alpha_mbar(c={c}, m_bar={m_bar}) = {mid:.10g}")
                return MbarSearchResult(alpha=mid, lower=lo, upper=hi, outcome=outcome)
        if above(outcome):
            hi = mid
        else:
            lo = mid

    closest = "none" if best is None else f"{best.m_inf:.8g}"
    raise BelowMinimalSpeedError(
        f"m_bar={m_bar} unattainable at c={c:.8g} (closest m_inf {closest}, alpha near {hi:.10g})"
    )


def _speed_feasible(c: float, kappa: float, m_bar: float, cfg: ShootConfig) -> bool:
    if m_bar == 0.0:
        return classify_trajectory(0.0, c, kappa, cfg).kind != ShootKind.EXITED_NEGATIVE_N
    try:
        find_alpha_for_mbar(c, kappa, m_bar, cfg)
        return True
    except (BelowMinimalSpeedError, NoBracketError) as e:
        logger.debug(f"c={c:.8g} infeasible: {e}")
        return False


def min_speed_search(
    kappa: float,
    m_bar: float,
    cfg: ShootConfig = ShootConfig(),
    numeric: bool = False,
    c_tol: float = 1e-3,
) -> MinSpeedResult:
    """Minimal speed of waves connecting (1, 0, 0) to (0, 0, m_bar).

    Returns the closed form 2 sqrt(1 - m_bar) when m_bar <= m*(kappa), unless
    ``numeric`` is set. Otherwise bisects over c in [2 sqrt(1 - m_bar), 2] on the
    feasibility of ``find_alpha_for_mbar``. A disagreement with the closed form
    is logged and reported, never absorbed.
    """
    formula = min_wave_speed_formula(kappa, m_bar)
    if formula.exact and not numeric:
        return MinSpeedResult(
            c_star=formula.lower, lower=formula.lower, upper=formula.lower,
            method="formula", formula=formula,
        )

    logger.info(f"Bisecting minimal speed for kappa={kappa}, m_bar={m_bar}")
    lo, hi = formula.lower, max(2.0, formula.upper)
    if _speed_feasible(lo, kappa, m_bar, cfg):
        lo = hi = formula.lower
    else:
        if not _speed_feasible(hi, kappa, m_bar, cfg):
            raise NoBracketError(f"no feasible speed found up to c={hi}")
        while hi - lo >= c_tol:
            mid = 0.5 * (lo + hi)
            if _speed_feasible(mid, kappa, m_bar, cfg):
                hi = mid
            else:
                lo = mid
    c_star = hi if lo == hi else 0.5 * (lo + hi)

    if formula.exact:
        agrees = abs(c_star - formula.lower) <= c_tol + 1e-3
    else:
        agrees = formula.lower - c_tol <= c_star <= formula.upper + c_tol
    if not agrees:
        logger.warning(
            f"Numeric minimal speed {c_star:.6g} disagrees with closed form "
            f"[{formula.lower:.6g}, {formula.upper:.6g}] for kappa={kappa}, m_bar={m_bar}"
        )
    logger.info(f"c*(kappa={kappa}, m_bar={m_bar}) = {c_star:.6g} in [{lo:.6g}, {hi:.6g}]")
    return MinSpeedResult(
        c_star=c_star, lower=lo, upper=hi, method="bisection",
        formula=formula, agrees_with_formula=agrees,
    )


def _tail_integral_of_n(outcome: ShootOutcome) -> np.ndarray:
    """Integral of n from each sample to infinity"""
    traj = outcome.trajectory
    n = traj.states[:, 0]
    cumulative = cumulative_hermite_trapezoid(traj.ys, n, traj.derivs[:, 0])
    remainder = 0.0
    if outcome.m_inf < 1.0:
        tail = tail_eigen(outcome.c, min(max(outcome.m_inf, 0.0), 1.0 - 1e-12))
        if tail.is_node and tail.nu1 < 0:
            remainder = max(n[-1], 0.0) / -tail.nu1
    return cumulative[-1] - cumulative + remainder


def closed_form_m(outcome: ShootOutcome) -> np.ndarray:
    """m(y) rebuilt from the quadrature of n on a ConvergedToMbar shot.

    m(y) = 1 / (1 + ((1 - m_bar) / m_bar) exp((kappa / c) int_y^inf n ds)), with
    m_bar the measured limit.
    """
    if outcome.kind != ShootKind.CONVERGED_TO_MBAR:
        raise DomainError(f"closed form needs a ConvergedToMbar shot, got {outcome.kind.value}")
    m_bar = outcome.m_inf
    if not 0.0 < m_bar < 1.0:
        raise DomainError(f"closed form needs 0 < m_bar < 1, got {m_bar}")
    integral = _tail_integral_of_n(outcome)
    return 1.0 / (1.0 + ((1.0 - m_bar) / m_bar) * np.exp((outcome.kappa / outcome.c) * integral))


def tail_diagnostics(outcome: ShootOutcome, params: Optional[ModelParams] = None, min_samples: int = 5) -> TailReport:
    """Compare the computed tail of a convergent shot with its predicted asymptotics.

    Args:
        outcome: A ConvergedToM1 or ConvergedToMbar shot.
        params: Parameters to compare against; taken from the outcome if None.
        min_samples: Minimum number of samples in the fit window.

    Returns:
        TailReport: Fitted amplitudes or rate with relative residuals.

    Raises:
        DomainError: If the shot did not converge.
        InsufficientDataError: If the fit window holds fewer than ``min_samples`` samples.
    """
    if not outcome.converged:
        raise DomainError(f"tail diagnostics need a convergent shot, got {outcome.kind.value}")
    c = params.c if params else outcome.c
    kappa = params.kappa if params else outcome.kappa
    traj = outcome.trajectory
    ys, n, m = traj.ys, traj.states[:, 0], traj.states[:, 2]

    if outcome.kind == ShootKind.CONVERGED_TO_M1:
        y_end = traj.final_y
        window = ys >= y_end / 10.0
        if y_end <= 0 or np.count_nonzero(window) < min_samples:
            raise InsufficientDataError(f"only {np.count_nonzero(window)} samples in the last decade")
        inv_y = 1.0 / ys[window]
        denom = np.dot(inv_y, inv_y)
        n_amp = float(np.dot(n[window], inv_y) / denom)
        m_amp = float(np.dot(1.0 - m[window], inv_y) / denom)
        n_expected = c / kappa
        report = TailReport(
            kind=outcome.kind, samples=int(np.count_nonzero(window)),
            n_amplitude=n_amp, n_expected=n_expected, m_amplitude=m_amp, m_expected=c,
        )
        report.residuals = {
            "n": abs(n_amp - n_expected) / n_expected,
            "m": abs(m_amp - c) / c,
            "y_times_gap_at_horizon": float(y_end * (1.0 - m[-1])),
        }
        return report

    gap = outcome.m_inf - m
    window = (gap > 1e-7) & (gap < 1e-3) & (n < 0.5)
    if np.count_nonzero(window) < min_samples:
        raise InsufficientDataError(f"only {np.count_nonzero(window)} samples in the exponential tail")
    slope, _ = np.polyfit(ys[window], np.log(gap[window]), 1)
    tail = tail_eigen(c, outcome.m_inf)
    expected = tail.nu1_real
    report = TailReport(
        kind=outcome.kind, samples=int(np.count_nonzero(window)),
        fitted_rate=float(slope), expected_rate=expected,
    )
    report.residuals = {"rate": abs(slope - expected) / abs(expected), "is_node": tail.is_node}
    return report
