# degenwave/ode_integrator.py

"""Adaptive Dormand-Prince 4(5) integration with dense output and event location.

The integrator is used for the desingularised travelling-wave system and for
the phase-plane problem. It supports:
- local error control with an embedded 4(5) pair and FSAL stage reuse
- cubic Hermite dense output over every accepted step
- sign-change events located by bisection on the dense output, then polished
  with exact sub-steps
- a monitor hook for stopping rules that are not sign changes (dwell tests)
- a partial trajectory attached to every integration failure
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .errors import DomainError, IntegrationError

logger = logging.getLogger(__name__)

RhsFunction = Callable[[float, np.ndarray], np.ndarray]
MonitorFunction = Callable[[float, np.ndarray, np.ndarray], Optional[str]]

DEFAULT_REL_TOL = 1e-10
DEFAULT_ABS_TOL = 1e-12
EVENT_TOL = 1e-10

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0])
_A = [
    [],
    [1.0 / 5.0],
    [3.0 / 40.0, 9.0 / 40.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
]
_B = np.array([35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0])
_B_HAT = np.array([
    5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0,
    -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0,
])
_E = _B - _B_HAT

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0


@dataclass
class EventSpec:
    """A scalar event g(y, state) = 0.

    Attributes:
        id (str): Label reported when the event fires.
        function (Callable): Continuous scalar function of (y, state).
        direction (int): -1 fires only on decreasing crossings, +1 only on increasing, 0 on both.
        terminal (bool): Whether integration stops at the first hit.
    """
    id: str
    function: Callable[[float, np.ndarray], float]
    direction: int = 0
    terminal: bool = True


@dataclass
class EventHit:
    """Location and state of an event (or of a monitor stop)"""
    id: str
    location: float
    state: np.ndarray


@dataclass
class Trajectory:
    """Samples of an integrated solution.

    Attributes:
        ys (np.ndarray): Strictly increasing sample points.
        states (np.ndarray): States at ``ys``, shape (len(ys), dim).
        derivs (np.ndarray): Right-hand side at ``ys``, same shape as ``states``.
        terminal_event (Optional[EventHit]): Event that stopped the integration, if any.
            Its location equals the last sample point.
        event_hits (List[EventHit]): Non-terminal event crossings, in order.
    """
    ys: np.ndarray
    states: np.ndarray
    derivs: np.ndarray
    terminal_event: Optional[EventHit] = None
    event_hits: List[EventHit] = field(default_factory=list)

    def __post_init__(self):
        self.ys = np.asarray(self.ys, dtype=float)
        self.states = np.asarray(self.states, dtype=float)
        self.derivs = np.asarray(self.derivs, dtype=float)
        if self.states.shape[0] != self.ys.shape[0] or self.derivs.shape != self.states.shape:
            raise DomainError("trajectory samples and states differ in length")
        if self.ys.size > 1 and np.any(np.diff(self.ys) <= 0):
            raise DomainError("trajectory sample points must be strictly increasing")

    def __len__(self) -> int:
        return self.ys.size

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    @property
    def final_y(self) -> float:
        return float(self.ys[-1])

    def dense(self) -> CubicHermiteSpline:
        """Piecewise cubic Hermite interpolant through all samples"""
        return CubicHermiteSpline(self.ys, self.states, self.derivs, axis=0)

    def refined(self, factor: int) -> "Trajectory":
        """Return a copy with ``factor - 1`` dense-output samples inserted in every step."""
        if factor < 1:
            raise DomainError(f"refinement factor must be >= 1, got {factor}")
        if factor == 1 or len(self) < 2:
            return self
        fractions = np.arange(factor) / factor
        steps = np.diff(self.ys)
        ys = (self.ys[:-1, None] + steps[:, None] * fractions[None, :]).ravel()
        ys = np.append(ys, self.ys[-1])
        spline = self.dense()
        return Trajectory(
            ys=ys,
            states=spline(ys),
            derivs=spline.derivative()(ys),
            terminal_event=self.terminal_event,
            event_hits=list(self.event_hits),
        )


def rhs_desingularised(state: Sequence[float], c: float, kappa: float) -> np.ndarray:
    """Right-hand side of the desingularised travelling-wave system.

    n' = p,  p' = -c p - (1 - n) n (1 - m),  m' = (kappa / c) m (1 - m) n

    >>> rhs_desingularised((0.5, -0.1, 0.5), 1.0, 1.0).tolist()
    [-0.1, -0.025, 0.125]
    """
    n, p, m = state
    return np.array([p, -c * p - (1.0 - n) * n * (1.0 - m), (kappa / c) * m * (1.0 - m) * n])


def desingularised_system(c: float, kappa: float) -> RhsFunction:
    """Bind (c, kappa) into an rhs(y, state) callable for ``integrate``."""
    if not c > 0:
        raise DomainError(f"c must be positive, got {c}")
    if not kappa > 0:
        raise DomainError(f"kappa must be positive, got {kappa}")
    rate = kappa / c

    def rhs(y: float, state: np.ndarray) -> np.ndarray:
        n, p, m = state
        return np.array([p, -c * p - (1.0 - n) * n * (1.0 - m), rate * m * (1.0 - m) * n])

    return rhs


def saddle_chart_system(c: float, kappa: float) -> RhsFunction:
    """The desingularised system in (u, p, m) with u = 1 - n.

    Near the saddle (1, 0, 0) the distance 1 - n is far below the resolution a
    relative tolerance gives n itself; integrating u keeps it resolved.
    """
    if not c > 0:
        raise DomainError(f"c must be positive, got {c}")
    if not kappa > 0:
        raise DomainError(f"kappa must be positive, got {kappa}")
    rate = kappa / c

    def rhs(y: float, state: np.ndarray) -> np.ndarray:
        u, p, m = state
        return np.array([-p, -c * p - u * (1.0 - u) * (1.0 - m), rate * m * (1.0 - m) * (1.0 - u)])

    return rhs


def _rms(values: np.ndarray) -> float:
    return float(np.sqrt(np.mean(values * values)))


def _stages(rhs: RhsFunction, y: float, x: np.ndarray, f: np.ndarray, h: float):
    """One Dormand-Prince step; returns (x_new, f_new, stage matrix)"""
    k = np.empty((7, x.size))
    k[0] = f
    for i in range(1, 6):
        k[i] = rhs(y + _C[i] * h, x + h * np.dot(_A[i], k[:i]))
    x_new = x + h * np.dot(_B[:6], k[:6])
    k[6] = rhs(y + h, x_new)
    return x_new, k[6], k


def _hermite(y0: float, x0: np.ndarray, f0: np.ndarray, y1: float, x1: np.ndarray, f1: np.ndarray, yq: float) -> np.ndarray:
    h = y1 - y0
    t = (yq - y0) / h
    t2 = t * t
    t3 = t2 * t
    return (
        (2 * t3 - 3 * t2 + 1) * x0
        + (t3 - 2 * t2 + t) * h * f0
        + (-2 * t3 + 3 * t2) * x1
        + (t3 - t2) * h * f1
    )


def _initial_step(rhs: RhsFunction, y0: float, x0: np.ndarray, f0: np.ndarray, rel_tol: float, abs_tol: float) -> float:
    scale = abs_tol + rel_tol * np.abs(x0)
    d0 = _rms(x0 / scale)
    d1 = _rms(f0 / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    x1 = x0 + h0 * f0
    f1 = rhs(y0 + h0, x1)
    d2 = _rms((f1 - f0) / scale) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1)


def _crossed(g0: float, g1: float, direction: int) -> bool:
    if direction <= 0 and g0 > 0 >= g1:
        return True
    if direction >= 0 and g0 < 0 <= g1:
        return True
    return False


def _locate_event(
    event: EventSpec,
    rhs: RhsFunction,
    y0: float, x0: np.ndarray, f0: np.ndarray,
    y1: float, x1: np.ndarray, f1: np.ndarray,
):
    """Bisect the dense output for a root of the event, then polish it with exact sub-steps"""
    lo, hi = y0, y1
    g_lo = event.function(y0, x0)
    while hi - lo > EVENT_TOL:
        mid = 0.5 * (lo + hi)
        g_mid = event.function(mid, _hermite(y0, x0, f0, y1, x1, f1, mid))
        if (g_lo > 0) == (g_mid > 0) and g_mid != 0.0:
            lo, g_lo = mid, g_mid
        else:
            hi = mid
    location = hi

    def exact(y):
        if y <= y0:
            return x0
        return _stages(rhs, y0, x0, f0, y - y0)[0]

    # Secant refinement on states from exact sub-steps; kept only if it stays in the step.
    a, b = lo, hi
    ga = event.function(a, exact(a))
    gb = event.function(b, exact(b))
    for _ in range(4):
        if gb == ga:
            break
        trial = b - gb * (b - a) / (gb - ga)
        if not y0 <= trial <= y1:
            break
        a, ga = b, gb
        b = trial
        gb = event.function(b, exact(b))
        if abs(b - a) < 1e-13 * max(1.0, abs(b)):
            break
    if y0 <= b <= y1 and abs(b - location) < 1e3 * EVENT_TOL + 1e-6 * (y1 - y0):
        location = b
    state = exact(location)
    return location, state


def integrate(
    rhs: RhsFunction,
    y0: float,
    state0: Sequence[float],
    y_max: float,
    rel_tol: float = DEFAULT_REL_TOL,
    abs_tol: float = DEFAULT_ABS_TOL,
    events: Optional[Sequence[EventSpec]] = None,
    monitor: Optional[MonitorFunction] = None,
    first_step: Optional[float] = None,
    max_step: float = math.inf,
    max_steps: int = 2_000_000,
) -> Trajectory:
    """Integrate ``state' = rhs(y, state)`` from ``y0`` towards ``y_max``.

    Args:
        rhs: Right-hand side function of (y, state).
        y0: Initial value of the independent variable.
        state0: Initial state vector.
        y_max: End of the integration interval; must exceed ``y0``.
        rel_tol: Relative local error tolerance.
        abs_tol: Absolute local error tolerance.
        events: Event specifications checked after every accepted step.
        monitor: Called after every accepted step with (y, state, derivative); a
            non-None return value stops the integration with that label.
        first_step: Initial step size; chosen automatically if None.
        max_step: Upper bound on the step size.
        max_steps: Upper bound on the number of accepted steps.

    Returns:
        Trajectory: All accepted samples, ending at y_max, at the first terminal
        event, or at the monitor stop.

    Raises:
        IntegrationError: On step-size underflow, non-finite states or too many
            steps. The partial trajectory is attached as ``partial``.
    """
    if not y_max > y0:
        raise DomainError(f"y_max ({y_max}) must exceed y0 ({y0})")
    if not (rel_tol > 0 and abs_tol > 0):
        raise DomainError("tolerances must be positive")
    events = list(events or [])

    y = float(y0)
    x = np.array(state0, dtype=float)
    f = rhs(y, x)
    ys: List[float] = [y]
    states: List[np.ndarray] = [x]
    derivs: List[np.ndarray] = [f]
    hits: List[EventHit] = []
    g_prev = [ev.function(y, x) for ev in events]

    def partial() -> Trajectory:
        return Trajectory(ys=ys, states=states, derivs=derivs, event_hits=hits)

    h = first_step if first_step is not None else _initial_step(rhs, y, x, f, rel_tol, abs_tol)
    h = min(h, max_step, y_max - y)
    steps = 0

    while y < y_max:
        h_min = 16.0 * np.finfo(float).eps * max(1.0, abs(y))
        if h < h_min:
            logger.debug(f"Step size underflow at y={y:.6g} (h={h:.3g})")
            raise IntegrationError(f"step size underflow at y={y:.6g}", partial=partial())
        if steps >= max_steps:
            raise IntegrationError(f"exceeded {max_steps} steps at y={y:.6g}", partial=partial())

        x_new, f_new, k = _stages(rhs, y, x, f, h)
        if not (np.all(np.isfinite(x_new)) and np.all(np.isfinite(f_new))):
            h *= _MIN_FACTOR
            continue
        scale = abs_tol + rel_tol * np.maximum(np.abs(x), np.abs(x_new))
        err = _rms(h * np.dot(_E, k) / scale)
        if err > 1.0:
            h *= max(_MIN_FACTOR, _SAFETY * err ** -0.2)
            continue

        y_new = y + h if y_max - (y + h) > h_min else y_max
        steps += 1

        # Earliest terminal event in this step wins
        stop: Optional[EventHit] = None
        for i, ev in enumerate(events):
            g_new = ev.function(y_new, x_new)
            if _crossed(g_prev[i], g_new, ev.direction):
                location, state = _locate_event(ev, rhs, y, x, f, y_new, x_new, f_new)
                hit = EventHit(id=ev.id, location=location, state=state)
                if ev.terminal:
                    if stop is None or location < stop.location:
                        stop = hit
                else:
                    hits.append(hit)
            g_prev[i] = g_new
        if stop is not None:
            hits[:] = [hit for hit in hits if hit.location <= stop.location]
            if stop.location > y:
                ys.append(stop.location)
                states.append(stop.state)
                derivs.append(rhs(stop.location, stop.state))
            else:
                states[-1] = stop.state
                derivs[-1] = rhs(ys[-1], stop.state)
            stop.location = ys[-1]
            logger.debug(f"Terminal event '{stop.id}' at y={stop.location:.10g}")
            return Trajectory(ys=ys, states=states, derivs=derivs, terminal_event=stop, event_hits=hits)

        y, x, f = y_new, x_new, f_new
        ys.append(y)
        states.append(x)
        derivs.append(f)

        if monitor is not None:
            label = monitor(y, x, f)
            if label is not None:
                logger.debug(f"Monitor stop '{label}' at y={y:.6g}")
                return Trajectory(
                    ys=ys, states=states, derivs=derivs,
                    terminal_event=EventHit(id=label, location=y, state=x),
                    event_hits=hits,
                )

        factor = _MAX_FACTOR if err == 0.0 else min(_MAX_FACTOR, _SAFETY * err ** -0.2)
        h = min(h * factor, max_step, y_max - y) if y < y_max else h

    return Trajectory(ys=ys, states=states, derivs=derivs, event_hits=hits)
