import math

import numpy as np
import pytest

from degenwave.errors import DomainError
from degenwave.model_core import (
    DimensionalParams,
    ModelParams,
    equilibria,
    kappa_star,
    m_star,
    min_wave_speed_formula,
    nondimensionalise,
    saddle_eigen,
    tail_eigen,
    to_dimensional_speed,
)


@pytest.mark.parametrize("K,k,rho,expected", [
    (1.0, 1.0, 1.0, 1.0),
    (2.0, 3.0, 6.0, 1.0),
    (5.0, 0.2, 0.5, 2.0),
])
def test_nondimensionalise(K, k, rho, expected):
    """kappa is K k / rho"""
    p = DimensionalParams(D_N=1.0, rho=rho, K=K, k=k, M_max=1.0)
    assert nondimensionalise(p) == pytest.approx(expected)


def test_dimensional_params_reject_non_positive():
    """Every dimensional field must be strictly positive"""
    with pytest.raises(DomainError):
        DimensionalParams(D_N=0.0, rho=1.0, K=1.0, k=1.0, M_max=1.0)
    with pytest.raises(DomainError):
        DimensionalParams(D_N=1.0, rho=1.0, K=1.0, k=-2.0, M_max=1.0)


def test_dimensional_speed():
    """A unit speed scales by sqrt(D_N rho)"""
    p = DimensionalParams(D_N=4.0, rho=9.0, K=1.0, k=1.0, M_max=1.0)
    assert to_dimensional_speed(2.0, p) == pytest.approx(12.0)


def test_model_params_validation():
    """ModelParams enforces kappa > 0, c > 0 and m_bar in [0, 1]"""
    ModelParams(kappa=1.0, c=1.0, m_bar=1.0)
    with pytest.raises(DomainError):
        ModelParams(kappa=0.0, c=1.0)
    with pytest.raises(DomainError):
        ModelParams(kappa=1.0, c=-1.0)
    with pytest.raises(DomainError):
        ModelParams(kappa=1.0, c=1.0, m_bar=1.5)


def test_equilibria():
    """The three fixed states are always present and m_bar entries are not duplicated"""
    base = equilibria([])
    assert set(base) == {(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)}
    assert (0.0, 0.5) in equilibria([0.5])
    assert len(equilibria([0.0])) == 3
    with pytest.raises(DomainError):
        equilibria([1.2])


@pytest.mark.parametrize("c,kappa,lambda2,lambda3", [
    (2.0, 1.0, math.sqrt(2.0) - 1.0, 0.5),
    (1.0, 1.0, (-1.0 + math.sqrt(5.0)) / 2.0, 1.0),
])
def test_saddle_eigen_values(c, kappa, lambda2, lambda3):
    """Unstable eigenvalues and the slowest rate at the invasion state"""
    eig = saddle_eigen(c, kappa)
    assert eig.lambda2 == pytest.approx(lambda2)
    assert eig.lambda3 == pytest.approx(lambda3)
    assert eig.mu == pytest.approx(min(lambda2, lambda3))
    assert eig.v3 == (0.0, 0.0, 1.0)


def test_saddle_eigen_root_identities():
    """lambda1 lambda2 = -1 and lambda1 + lambda2 = -c over a range of speeds"""
    for c in np.linspace(0.1, 5.0, 25):
        eig = saddle_eigen(float(c), 1.0)
        assert eig.lambda1 * eig.lambda2 == pytest.approx(-1.0)
        assert eig.lambda1 + eig.lambda2 == pytest.approx(-c)
        assert eig.lambda1 < 0 < eig.lambda2


def test_saddle_eigen_rejects_zero_speed():
    """c must be positive"""
    with pytest.raises(DomainError):
        saddle_eigen(0.0, 1.0)


def test_tail_eigen_kpp_critical():
    """c=2, m_bar=0 is a double root at -1"""
    tail = tail_eigen(2.0, 0.0)
    assert tail.is_node
    assert tail.nu1 == pytest.approx(-1.0)
    assert tail.nu2 == pytest.approx(-1.0)


def test_tail_eigen_spiral_and_node():
    """Negative discriminant gives a complex pair; positive gives two real roots"""
    spiral = tail_eigen(1.0, 0.5)
    assert not spiral.is_node
    assert spiral.nu1_imag == pytest.approx(0.5)
    with pytest.raises(DomainError):
        spiral.nu1

    node = tail_eigen(2.0, 0.5)
    assert node.is_node
    assert node.nu1 == pytest.approx((-2.0 + math.sqrt(2.0)) / 2.0)
    assert node.nu1 * node.nu2 == pytest.approx(0.5)


def test_tail_eigen_degenerate_state():
    """The expansion is not defined at m_bar = 1"""
    with pytest.raises(DomainError):
        tail_eigen(1.0, 1.0)


def test_thresholds():
    """kappa* and m* are mutually inverse"""
    assert kappa_star(0.25) == pytest.approx(3.0)
    assert m_star(1.0) == pytest.approx(0.5)
    assert m_star(kappa_star(0.75)) == pytest.approx(0.75, abs=1e-15)
    for m_bar in np.linspace(0.01, 0.99, 50):
        assert m_star(kappa_star(float(m_bar))) == pytest.approx(m_bar, abs=1e-14)
    with pytest.raises(DomainError):
        kappa_star(0.0)
    with pytest.raises(DomainError):
        m_star(0.0)


def test_min_wave_speed_formula_exact():
    """At or below m*(kappa) the minimal speed is 2 sqrt(1 - m_bar)"""
    bound = min_wave_speed_formula(1.0, 0.25)
    assert bound.exact
    assert bound.value == pytest.approx(2.0 * math.sqrt(0.75))
    assert min_wave_speed_formula(1.0, 0.0).value == pytest.approx(2.0)


def test_min_wave_speed_formula_interval():
    """Above m*(kappa) only an interval is known"""
    bound = min_wave_speed_formula(1.0, 0.75)
    assert not bound.exact
    assert bound.lower == pytest.approx(1.0)
    assert bound.upper == pytest.approx(math.sqrt(2.0))
    with pytest.raises(DomainError):
        bound.value
    with pytest.raises(DomainError):
        min_wave_speed_formula(1.0, 1.0)


def test_min_wave_speed_non_increasing_in_m_bar():
    """Both bounds decrease as the far-field density grows"""
    lowers, uppers = [], []
    for m_bar in np.linspace(0.0, 0.99, 100):
        bound = min_wave_speed_formula(1.0, float(m_bar))
        lowers.append(bound.lower)
        uppers.append(bound.upper)
    assert np.all(np.diff(lowers) <= 0)
    assert np.all(np.diff(uppers) <= 1e-15)


def test_node_flag_matches_speed_bound():
    """tail_eigen is a node exactly when c is at least the lower speed bound"""
    for m_bar in (0.0, 0.3, 0.6, 0.9):
        lower = min_wave_speed_formula(1.0, m_bar).lower
        assert tail_eigen(lower * 1.01, m_bar).is_node
        assert not tail_eigen(lower * 0.99, m_bar).is_node
