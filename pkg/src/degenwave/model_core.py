# degenwave/model_core.py

"""Parameters, steady states and local eigen-structure of the invasion model.

The nondimensional model is

    N_t = ((1 - M) N_x)_x + N (1 - N),    M_t = -kappa M N,

with kappa = K k / rho. Travelling waves with speed c are studied in the
desingularised variables (n, p, m); this module holds the closed-form pieces:
- dimensional to nondimensional conversion
- homogeneous steady states
- eigen-data at the saddle (1, 0, 0) and at the far-field states (0, 0, m_bar)
- the thresholds kappa*(m_bar), m*(kappa) and the minimal-speed formula
"""
import logging
import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

from .errors import DomainError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DimensionalParams:
    """Physical inputs of the model.

    Attributes:
        D_N (float): Tumour cell diffusivity (length^2 / time).
        rho (float): Tumour growth rate (1 / time).
        K (float): Carrying capacity (cells / volume).
        k (float): Per-cell ECM degradation rate (volume / cells / time).
        M_max (float): Maximal ECM density (mass / volume).
    """
    D_N: float
    rho: float
    K: float
    k: float
    M_max: float = 1.0

    def __post_init__(self):
        for name in ("D_N", "rho", "K", "k", "M_max"):
            value = getattr(self, name)
            if not value > 0:
                raise DomainError(f"{name} must be strictly positive, got {value}")

    def length_scale(self) -> float:
        return math.sqrt(self.D_N / self.rho)

    def time_scale(self) -> float:
        return 1.0 / self.rho

    def speed_scale(self) -> float:
        return math.sqrt(self.D_N * self.rho)


@dataclass(frozen=True)
class ModelParams:
    """Nondimensional parameters of a travelling wave.

    Attributes:
        kappa (float): Dimensionless ECM degradation rate.
        c (float): Wave speed.
        m_bar (float): Far-field ECM density ahead of the front, in [0, 1].
    """
    kappa: float
    c: float
    m_bar: float = 0.0

    def __post_init__(self):
        if not self.kappa > 0:
            raise DomainError(f"kappa must be positive, got {self.kappa}")
        if not self.c > 0:
            raise DomainError(f"c must be positive, got {self.c}")
        if not 0.0 <= self.m_bar <= 1.0:
            raise DomainError(f"m_bar must lie in [0, 1], got {self.m_bar}")


@dataclass(frozen=True)
class EigenData:
    """Linearisation of the desingularised system at the saddle (1, 0, 0).

    Attributes:
        lambda1 (float): Stable eigenvalue (negative).
        lambda2 (float): Unstable eigenvalue of the (n, p) block.
        lambda3 (float): Unstable eigenvalue kappa / c of the m direction.
        v1, v2, v3 (Tuple[float, float, float]): Matching eigenvectors.
        mu (float): min(lambda2, lambda3), the slowest unstable rate.
    """
    lambda1: float
    lambda2: float
    lambda3: float
    v1: Tuple[float, float, float]
    v2: Tuple[float, float, float]
    v3: Tuple[float, float, float]
    mu: float


@dataclass(frozen=True)
class TailEigenData:
    """Eigenvalues of the (n, p) block at a far-field state (0, 0, m_bar).

    The pair is stored as real and imaginary parts; ``is_node`` tells whether it is real.

    Attributes:
        nu1_real, nu1_imag (float): The root (-c + sqrt(c^2 - 4(1 - m_bar))) / 2.
        nu2_real, nu2_imag (float): The root (-c - sqrt(c^2 - 4(1 - m_bar))) / 2.
        is_node (bool): True iff c^2 >= 4 (1 - m_bar).
    """
    nu1_real: float
    nu1_imag: float
    nu2_real: float
    nu2_imag: float
    is_node: bool

    @property
    def nu1(self) -> float:
        if not self.is_node:
            raise DomainError("nu1 is complex for a spiral tail")
        return self.nu1_real

    @property
    def nu2(self) -> float:
        if not self.is_node:
            raise DomainError("nu2 is complex for a spiral tail")
        return self.nu2_real


@dataclass(frozen=True)
class SpeedBound:
    """Closed-form information on the minimal wave speed.

    When ``exact`` is True, ``lower == upper`` is the minimal speed itself;
    otherwise only the interval [lower, upper] is known.
    """
    lower: float
    upper: float
    exact: bool

    @property
    def value(self) -> float:
        if not self.exact:
            raise DomainError("minimal speed is only bracketed in this regime")
        return self.lower


def nondimensionalise(p: DimensionalParams) -> float:
    """Return kappa = K k / rho.

    >>> nondimensionalise(DimensionalParams(D_N=1.0, rho=6.0, K=2.0, k=3.0))
    1.0
    """
    return p.K * p.k / p.rho


def to_dimensional_speed(c: float, p: DimensionalParams) -> float:
    """Convert a nondimensional wave speed back to length / time."""
    if not c > 0:
        raise DomainError(f"c must be positive, got {c}")
    return c * p.speed_scale()


def equilibria(m_bar_grid: Sequence[float]) -> List[Tuple[float, float]]:
    """Spatially homogeneous steady states (N, M).

    Always contains (0, 0), (1, 0) and (0, 1), plus one (0, m_bar) for each
    requested m_bar in [0, 1). The result is sorted and free of duplicates.
    """
    states = {(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)}
    for m_bar in m_bar_grid:
        m_bar = float(m_bar)
        if not 0.0 <= m_bar <= 1.0:
            raise DomainError(f"m_bar must lie in [0, 1], got {m_bar}")
        states.add((0.0, m_bar))
    return sorted(states)


def saddle_eigen(c: float, kappa: float) -> EigenData:
    """Eigenvalues and eigenvectors at (n, p, m) = (1, 0, 0)."""
    if not c > 0:
        raise DomainError(f"c must be positive, got {c}")
    if not kappa > 0:
        raise DomainError(f"kappa must be positive, got {kappa}")
    root = math.sqrt(c * c + 4.0)
    lambda1 = (-c - root) / 2.0
    lambda2 = (-c + root) / 2.0
    lambda3 = kappa / c
    return EigenData(
        lambda1=lambda1,
        lambda2=lambda2,
        lambda3=lambda3,
        v1=((c - root) / 2.0, 1.0, 0.0),
        v2=((c + root) / 2.0, 1.0, 0.0),
        v3=(0.0, 0.0, 1.0),
        mu=min(lambda2, lambda3),
    )


def tail_eigen(c: float, m_bar: float) -> TailEigenData:
    """Eigenvalues of the (n, p) block at (0, 0, m_bar); the m direction is neutral."""
    if not c > 0:
        raise DomainError(f"c must be positive, got {c}")
    if not 0.0 <= m_bar < 1.0:
        raise DomainError(f"m_bar must lie in [0, 1), got {m_bar}")
    disc = c * c - 4.0 * (1.0 - m_bar)
    if disc >= 0.0:
        root = math.sqrt(disc)
        return TailEigenData(
            nu1_real=(-c + root) / 2.0,
            nu1_imag=0.0,
            nu2_real=(-c - root) / 2.0,
            nu2_imag=0.0,
            is_node=True,
        )
    imag = math.sqrt(-disc) / 2.0
    return TailEigenData(
        nu1_real=-c / 2.0,
        nu1_imag=imag,
        nu2_real=-c / 2.0,
        nu2_imag=-imag,
        is_node=False,
    )


def kappa_star(m_bar: float) -> float:
    """Degradation threshold (1 - m_bar) / m_bar."""
    if not 0.0 < m_bar < 1.0:
        raise DomainError(f"kappa_star needs 0 < m_bar < 1, got {m_bar}")
    return (1.0 - m_bar) / m_bar


def m_star(kappa: float) -> float:
    """Density threshold 1 / (kappa + 1), the inverse of kappa_star."""
    if not kappa > 0:
        raise DomainError(f"m_star needs kappa > 0, got {kappa}")
    return 1.0 / (kappa + 1.0)


def min_wave_speed_formula(kappa: float, m_bar: float) -> SpeedBound:
    """Closed-form minimal wave speed, or the interval that contains it.

    For m_bar <= m*(kappa) the minimal speed is 2 sqrt(1 - m_bar). Above the
    threshold it lies in [2 sqrt(1 - m_bar), 2 sqrt(1 - m*(kappa))].
    """
    if not kappa > 0:
        raise DomainError(f"kappa must be positive, got {kappa}")
    if not 0.0 <= m_bar < 1.0:
        raise DomainError(f"m_bar must lie in [0, 1), got {m_bar}")
    lower = 2.0 * math.sqrt(1.0 - m_bar)
    threshold = m_star(kappa)
    if m_bar <= threshold:
        return SpeedBound(lower=lower, upper=lower, exact=True)
    upper = 2.0 * math.sqrt(1.0 - threshold)
    logger.debug(f"m_bar={m_bar} above m*={threshold:.6g}; speed bracketed in [{lower:.6g}, {upper:.6g}]")
    return SpeedBound(lower=lower, upper=upper, exact=False)
