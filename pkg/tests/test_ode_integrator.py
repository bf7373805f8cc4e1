import math

import numpy as np
import pytest

from degenwave.errors import DomainError, IntegrationError
from degenwave.ode_integrator import (
    EventSpec,
    Trajectory,
    desingularised_system,
    integrate,
    rhs_desingularised,
    saddle_chart_system,
)


def decay(y, x):
    return -x


def test_rhs_desingularised_values():
    """Direct substitution at a few states"""
    assert np.allclose(rhs_desingularised((1.0, 0.0, 0.0), 1.0, 1.0), 0.0)
    for m_bar in (0.0, 0.3, 0.9):
        assert np.allclose(rhs_desingularised((0.0, 0.0, m_bar), 2.0, 1.0), 0.0)
    assert np.allclose(rhs_desingularised((0.5, -0.1, 0.5), 1.0, 1.0), [-0.1, -0.025, 0.125])


def test_bound_system_matches_rhs():
    """desingularised_system gives the same derivative as rhs_desingularised"""
    rhs = desingularised_system(1.5, 0.7)
    state = np.array([0.3, -0.2, 0.4])
    assert np.allclose(rhs(0.0, state), rhs_desingularised(state, 1.5, 0.7))
    with pytest.raises(DomainError):
        desingularised_system(0.0, 1.0)


def test_exponential_decay():
    """x' = -x from x(0)=1 reaches exp(-1) at y=1"""
    traj = integrate(decay, 0.0, [1.0], 1.0)
    assert traj.final_y == pytest.approx(1.0)
    assert traj.final_state[0] == pytest.approx(math.exp(-1.0), abs=1e-8)
    assert traj.terminal_event is None
    assert np.all(np.diff(traj.ys) > 0)
    assert len(traj) == traj.states.shape[0]


def test_event_location():
    """The terminal event x = 0.5 sits at y = ln 2"""
    event = EventSpec(id="half", function=lambda y, x: x[0] - 0.5, direction=-1)
    traj = integrate(decay, 0.0, [1.0], 5.0, events=[event])
    assert traj.terminal_event is not None
    assert traj.terminal_event.id == "half"
    assert traj.terminal_event.location == pytest.approx(math.log(2.0), abs=1e-9)
    assert traj.terminal_event.location == traj.final_y


def test_event_independent_of_first_step():
    """Event location does not depend on the step-size history"""
    event = EventSpec(id="half", function=lambda y, x: x[0] - 0.5, direction=-1)
    locations = [
        integrate(decay, 0.0, [1.0], 5.0, events=[event], first_step=h).terminal_event.location
        for h in (1e-4, 1e-2, 0.3)
    ]
    assert max(locations) - min(locations) < 1e-8


def test_direction_filter():
    """An increasing-only event never fires on a decreasing solution"""
    event = EventSpec(id="half", function=lambda y, x: x[0] - 0.5, direction=1)
    traj = integrate(decay, 0.0, [1.0], 2.0, events=[event])
    assert traj.terminal_event is None
    assert traj.final_y == pytest.approx(2.0)


def test_non_terminal_events_recorded():
    """Non-terminal crossings are collected without stopping"""
    event = EventSpec(id="zero", function=lambda y, x: x[0], direction=0, terminal=False)
    rhs = lambda y, x: np.array([x[1], -x[0]])
    traj = integrate(rhs, 0.0, [1.0, 0.0], 10.0, events=[event])
    assert traj.final_y == pytest.approx(10.0)
    expected = [math.pi / 2.0 + k * math.pi for k in range(3)]
    assert [hit.location for hit in traj.event_hits] == pytest.approx(expected, abs=1e-8)


def test_monitor_stop():
    """A monitor label stops the integration at an accepted step"""
    monitor = lambda y, x, f: "small" if x[0] < 0.1 else None
    traj = integrate(decay, 0.0, [1.0], 10.0, monitor=monitor)
    assert traj.terminal_event.id == "small"
    assert traj.final_state[0] < 0.1
    assert traj.final_y < 10.0


def test_equilibrium_stays_constant():
    """The saddle (1, 0, 0) is a fixed point of the desingularised system"""
    traj = integrate(desingularised_system(1.0, 1.0), 0.0, [1.0, 0.0, 0.0], 50.0)
    assert np.allclose(traj.states, [1.0, 0.0, 0.0])


def test_tolerance_convergence():
    """Tighter tolerances do not make the end-point error worse on a smooth problem"""
    rhs = lambda y, x: np.array([x[1], -x[0]])
    errors = []
    for tol in (1e-5, 1e-6, 1e-7, 1e-8, 1e-9):
        traj = integrate(rhs, 0.0, [1.0, 0.0], 10.0, rel_tol=tol, abs_tol=tol * 1e-2)
        errors.append(abs(traj.final_state[0] - math.cos(10.0)))
    worse = sum(1 for a, b in zip(errors, errors[1:]) if b > a * 1.5)
    assert worse <= 1
    assert errors[-1] < errors[0]


def test_m_non_decreasing_along_orbit():
    """With n > 0 and 0 < m < 1 the m component never decreases"""
    rhs = desingularised_system(1.0, 1.0)
    traj = integrate(rhs, 0.0, [0.9, -0.05, 0.1], 20.0,
                     events=[EventSpec(id="exit", function=lambda y, x: x[0], direction=-1)])
    inside = traj.states[:, 0] > 0
    m = traj.states[inside, 2]
    assert np.all(np.diff(m) >= -1e-12)


def test_dense_and_refined():
    """Dense output interpolates the samples and refinement keeps the end points"""
    traj = integrate(decay, 0.0, [1.0], 2.0)
    spline = traj.dense()
    assert spline(1.0)[0] == pytest.approx(math.exp(-1.0), abs=1e-6)
    refined = traj.refined(4)
    assert len(refined) == 4 * (len(traj) - 1) + 1
    assert refined.ys[0] == traj.ys[0]
    assert refined.ys[-1] == traj.ys[-1]
    with pytest.raises(DomainError):
        traj.refined(0)


def test_invalid_arguments():
    """y_max must exceed y0 and tolerances must be positive"""
    with pytest.raises(DomainError):
        integrate(decay, 1.0, [1.0], 1.0)
    with pytest.raises(DomainError):
        integrate(decay, 0.0, [1.0], 1.0, rel_tol=0.0)


def test_trajectory_rejects_unsorted_samples():
    """Sample points must be strictly increasing"""
    with pytest.raises(DomainError):
        Trajectory(ys=[0.0, 0.0], states=[[1.0], [1.0]], derivs=[[0.0], [0.0]])


def test_blow_up_carries_partial_trajectory():
    """Finite-time blow-up raises IntegrationError with the samples computed so far"""
    with pytest.raises(IntegrationError) as excinfo:
        integrate(lambda y, x: x * x, 0.0, [1.0], 2.0)
    partial = excinfo.value.partial
    assert isinstance(partial, Trajectory)
    assert len(partial) > 1
    assert partial.final_y < 1.0


def test_terminal_event_derivative_matches_state():
    """The last stored derivative is the rhs at the event state"""
    event = EventSpec(id="half", function=lambda y, x: x[0] - 0.5, direction=-1)
    for h in (1e-3, 0.3, 2.0):
        traj = integrate(decay, 0.0, [1.0], 5.0, events=[event], first_step=h)
        assert traj.derivs[-1] == pytest.approx(decay(traj.final_y, traj.final_state))
        assert traj.derivs[-1][0] == pytest.approx(-0.5, abs=1e-9)


def test_monitor_stop_derivative_matches_state():
    """A monitor stop keeps the derivative of the stored state"""
    rhs = desingularised_system(1.0, 1.0)
    monitor = lambda y, x, f: "low" if x[0] < 0.5 else None
    traj = integrate(rhs, 0.0, [1.0 - 1e-6, -1e-6, 1e-6], 100.0, monitor=monitor)
    assert np.allclose(traj.derivs[-1], rhs(traj.final_y, traj.final_state))


def test_saddle_chart_mirrors_desingularised_system():
    """In u = 1 - n the first component flips sign and the rest agree"""
    chart = saddle_chart_system(1.5, 0.7)
    rhs = desingularised_system(1.5, 0.7)
    n, p, m = 0.999, -1e-3, 1e-4
    a = chart(0.0, np.array([1.0 - n, p, m]))
    b = rhs(0.0, np.array([n, p, m]))
    assert a[0] == pytest.approx(-b[0])
    assert a[1:] == pytest.approx(b[1:])
    assert np.allclose(chart(0.0, np.zeros(3)), 0.0)
    with pytest.raises(DomainError):
        saddle_chart_system(1.0, 0.0)
