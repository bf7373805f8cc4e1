import math

import numpy as np
import pytest

from degenwave.conjecture_lab import (
    conjecture_scan,
    default_speed_rule,
    h_at_zero,
    integrate_phase_plane,
    p_prime_zero,
    reaction_diagnostics,
    scan_cell,
)
from degenwave.errors import ComplexRootsError, DomainError
from degenwave.model_core import kappa_star


@pytest.fixture(scope="module")
def half_density_solution():
    """Plus-branch solution at c=2, kappa=1, m_bar=0.5"""
    return integrate_phase_plane(2.0, 1.0, 0.5, branch="plus", samples=2000)


@pytest.mark.parametrize("c,m_bar,expected", [
    (2.0, 0.5, (-1.7071068, -0.2928932)),
    (3.0, 0.75, (-2.9142136, -0.0857864)),
])
def test_p_prime_zero_roots(c, m_bar, expected):
    """Both roots of the slope at n = 0, minus branch first"""
    minus, plus = p_prime_zero(c, m_bar)
    assert minus == pytest.approx(expected[0], abs=1e-6)
    assert plus == pytest.approx(expected[1], abs=1e-6)
    assert minus * plus == pytest.approx(1.0 - m_bar)


def test_p_prime_zero_double_root():
    """At c = 2 sqrt(1 - m_bar) both roots equal -c / 2"""
    for m_bar in (0.0, 0.25, 0.5, 0.75):
        c = default_speed_rule(1.0, m_bar)
        minus, plus = p_prime_zero(c, m_bar)
        assert minus == pytest.approx(-c / 2.0, abs=1e-6)
        assert plus == pytest.approx(-c / 2.0, abs=1e-6)


def test_p_prime_zero_errors():
    """Slow speeds give complex roots; bad inputs are domain errors"""
    with pytest.raises(ComplexRootsError):
        p_prime_zero(1.0, 0.5)
    with pytest.raises(DomainError):
        p_prime_zero(0.0, 0.5)
    with pytest.raises(DomainError):
        p_prime_zero(2.0, 1.0)


def test_h_at_zero_formula():
    """H(0) = -m_bar (kappa / c) / P'(0)"""
    assert h_at_zero(1.0, 10.0, 0.75) == pytest.approx(15.0)
    assert h_at_zero(2.0, 1.0, 0.0) == 0.0


def test_closed_form_m(half_density_solution):
    """The integrated M agrees with the quadrature formula"""
    sol = half_density_solution
    assert np.max(np.abs(sol.closed_form_M() - sol.M_vals)) < 1e-8
    assert sol.n_samples.size == 2000
    assert np.all(sol.P_vals <= 0.0)
    assert np.all(np.diff(sol.M_vals) <= 1e-12)


def test_reaction_identity(half_density_solution):
    """g'' computed directly matches -2 (1 - M)(1 - H)"""
    diag = reaction_diagnostics(half_density_solution)
    assert diag.identity_residual < 1e-8


def test_reaction_slope_at_zero(half_density_solution):
    """g'(0) equals 1 - m_bar"""
    diag = reaction_diagnostics(half_density_solution)
    assert diag.g_prime_at_0 == pytest.approx(0.5, abs=1e-5)
    assert diag.H_at_0 == pytest.approx(h_at_zero(2.0, 1.0, 0.5))


def test_integrate_phase_plane_arguments():
    """Branch names and the regularisation distance are checked"""
    with pytest.raises(DomainError):
        integrate_phase_plane(2.0, 1.0, 0.5, branch="middle")
    with pytest.raises(DomainError):
        integrate_phase_plane(2.0, 1.0, 0.5, n_tol=0.5)
    with pytest.raises(ComplexRootsError):
        integrate_phase_plane(1.0, 1.0, 0.5)


def test_fisher_kpp_row():
    """Without ECM the reaction term is logistic: g'' = -2 and H = 0"""
    verdict = scan_cell((1.0, 0.0, 2.0, "plus", 1000))
    assert verdict.status == "ok"
    assert verdict.gdd_neg is True
    assert verdict.g_kpp is True
    assert verdict.H0_lt_1 is True
    assert verdict.H_lt_1 is True


def test_fast_degradation_breaks_h0():
    """kappa = 10, m_bar = 0.75 has H(0) > 1 even if integration fails"""
    verdict = scan_cell((10.0, 0.75, default_speed_rule(10.0, 0.75), "plus", 1000))
    assert verdict.H0_lt_1 is False
    assert verdict.details["H_at_0"] == pytest.approx(15.0, rel=1e-6)


@pytest.mark.parametrize("m_bar", [0.25, 0.5, 0.75])
def test_slow_degradation_keeps_h0(m_bar):
    """For kappa <= kappa*(m_bar) the threshold speed gives H(0) < 1"""
    kappa = kappa_star(m_bar)
    verdict = scan_cell((kappa, m_bar, default_speed_rule(kappa, m_bar), "plus", 1000))
    assert verdict.H0_lt_1 is True
    assert verdict.details["H_at_0"] == pytest.approx(0.5, rel=1e-6)


def test_conjecture_scan_order():
    """Cells come back kappa-major"""
    verdicts = conjecture_scan([0.5, 1.0], [0.0, 0.25])
    assert [(v.kappa, v.m_bar) for v in verdicts] == [(0.5, 0.0), (0.5, 0.25), (1.0, 0.0), (1.0, 0.25)]
    assert all(v.c == pytest.approx(2.0 * math.sqrt(1.0 - v.m_bar)) for v in verdicts)


def test_conjecture_scan_arguments():
    """Empty grids and coarse sampling are rejected"""
    with pytest.raises(DomainError):
        conjecture_scan([], [0.5])
    with pytest.raises(DomainError):
        conjecture_scan([1.0], [0.5], samples=100)
