import math
import pickle

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slowfast.errors import NoBracket, NonFiniteField
from slowfast.ode import (
    ANY,
    FALLING,
    RISING,
    EventSpec,
    State,
    ToleranceConfig,
    Trajectory,
    integrate,
    locate_event,
    step,
)


def decay(t, q):
    return (-q[0], -2.0 * q[1])


def oscillator(t, q):
    return (q[1], -q[0])


def test_linear_decay_matches_exponential():
    traj = integrate(decay, State(0.0, (1.0, 1.0)), 5.0, ToleranceConfig(rel_tol=1e-11))
    assert traj.termination == "time_limit"
    assert traj.t[-1] == 5.0
    x, y = traj.final.q
    assert x == pytest.approx(math.exp(-5), rel=1e-9)
    assert y == pytest.approx(math.exp(-10), rel=1e-9)


def test_oscillator_keeps_energy_over_many_periods():
    tol = ToleranceConfig(rel_tol=1e-11, abs_tol=1e-14)
    traj = integrate(oscillator, State(0.0, (1.0, 0.0)), 20 * math.pi, tol)
    energy = traj.q[:, 0] ** 2 + traj.q[:, 1] ** 2
    assert np.max(np.abs(energy - 1)) < 1e-8
    assert traj.final.q[0] == pytest.approx(1.0, abs=1e-8)


def test_error_shrinks_with_tolerance():
    errs = []
    for rt in (1e-5, 1e-7, 1e-9, 1e-11):
        traj = integrate(oscillator, State(0.0, (1.0, 0.0)), 10.0, ToleranceConfig(rel_tol=rt, abs_tol=rt))
        errs.append(abs(traj.final.q[0] - math.cos(10.0)))
    assert all(b < a for a, b in zip(errs, errs[1:]))
    assert errs[-1] < 1e-9


def test_single_step_is_fifth_order():
    # halving h should cut the local error by roughly 2^6 (local order 6 for a 5th order method)
    exact = lambda h: math.cos(h)
    e1 = abs(step(oscillator, State(0.0, (1.0, 0.0)), 0.2)[0].q[0] - exact(0.2))
    e2 = abs(step(oscillator, State(0.0, (1.0, 0.0)), 0.1)[0].q[0] - exact(0.1))
    assert e1 / e2 > 40


def test_event_time_and_residual():
    zero = EventSpec("x0", lambda t, q: q[0])
    traj = integrate(oscillator, State(0.0, (1.0, 0.0)), 10.0, ToleranceConfig(rel_tol=1e-11), [zero])
    times = [ev.t_event for ev in traj.events]
    expected = [math.pi / 2 + k * math.pi for k in range(3)]
    assert times == pytest.approx(expected, abs=1e-9)
    dirs = [ev.direction for ev in traj.events]
    assert dirs == [FALLING, RISING, FALLING]
    assert all(ev.residual < 1e-10 for ev in traj.events)
    # the refined event states are samples of the trajectory
    for ev in traj.events:
        assert ev.t_event in traj.t


def test_event_direction_filter_and_terminal():
    rising = EventSpec("up", lambda t, q: q[0], RISING)
    traj = integrate(oscillator, State(0.0, (1.0, 0.0)), 10.0, None, [rising])
    assert [round(ev.t_event, 6) for ev in traj.events] == [round(1.5 * math.pi, 6)]

    stop = EventSpec("stop", lambda t, q: q[0], ANY, terminal=True)
    traj = integrate(oscillator, State(0.0, (1.0, 0.0)), 10.0, None, [stop])
    assert traj.termination == "terminal_event"
    assert traj.t[-1] == pytest.approx(math.pi / 2, abs=1e-9)
    assert len(traj.events) == 1


def test_duplicate_event_ids_rejected():
    ev = EventSpec("a", lambda t, q: q[0])
    with pytest.raises(ValueError, match="duplicate"):
        integrate(oscillator, State(0.0, (1.0, 0.0)), 1.0, None, [ev, ev])


def test_bad_direction_rejected():
    with pytest.raises(ValueError):
        EventSpec("a", lambda t, q: q[0], "sideways")


def test_locate_event_needs_a_sign_change():
    a, b = State(0.0, (1.0, 0.0)), State(0.1, (0.995, -0.0998))
    with pytest.raises(NoBracket):
        locate_event(oscillator, (a, b), lambda t, q: q[0], 1e-12)


def test_non_finite_field_raises():
    def bad(t, q):
        return (math.nan if t > 0.5 else 1.0, 0.0)

    with pytest.raises(NonFiniteField):
        integrate(bad, State(0.0, (0.0, 0.0)), 1.0)


def test_step_budget_is_reported():
    traj = integrate(oscillator, State(0.0, (1.0, 0.0)), 100.0, ToleranceConfig(max_steps=10))
    assert traj.termination == "step_budget"
    assert traj.t[-1] < 100.0


@pytest.mark.parametrize(
    "kwargs", [dict(rel_tol=0), dict(abs_tol=-1), dict(min_step=1.0, max_step=0.5), dict(max_steps=0)]
)
def test_tolerance_validation(kwargs):
    with pytest.raises(ValueError):
        ToleranceConfig(**kwargs)


def test_tolerance_replace_and_pickle():
    tol = ToleranceConfig().replace(rel_tol=1e-6)
    assert tol.rel_tol == 1e-6 and tol.abs_tol == 1e-12
    assert pickle.loads(pickle.dumps(tol)) == tol


def test_dense_output_is_accurate_between_samples():
    traj = integrate(oscillator, State(0.0, (1.0, 0.0)), 6.0, ToleranceConfig(rel_tol=1e-11))
    for t in np.linspace(0.05, 5.95, 37):
        x, _ = traj.state_at(t)
        assert x == pytest.approx(math.cos(t), abs=1e-6)
    with pytest.raises(ValueError):
        traj.state_at(7.0)


def test_quadrature_column():
    traj = integrate(
        oscillator, State(0.0, (1.0, 0.0)), math.pi, ToleranceConfig(rel_tol=1e-11),
        quadrature=lambda t, q: q[0] ** 2,
    )
    assert traj.q.shape[1] == 3
    assert traj.final.q[2] == pytest.approx(math.pi / 2, rel=1e-9)


def test_concat_requires_continuation():
    a = integrate(decay, State(0.0, (1.0, 1.0)), 1.0)
    b = integrate(decay, a.final, 2.0)
    joined = a.concat(b)
    assert len(joined) == len(a) + len(b) - 1
    assert np.all(np.diff(joined.t) > 0)
    with pytest.raises(ValueError):
        a.concat(a)


def test_runs_are_deterministic():
    zero = EventSpec("x0", lambda t, q: q[0])
    r1 = integrate(oscillator, State(0.0, (1.0, 0.0)), 30.0, None, [zero])
    r2 = integrate(oscillator, State(0.0, (1.0, 0.0)), 30.0, None, [zero])
    assert np.array_equal(r1.t, r2.t) and np.array_equal(r1.q, r2.q)
    assert r1.events == r2.events


def test_hand_built_trajectory_interpolates_linearly():
    traj = Trajectory("XY", np.array([0.0, 1.0]), np.array([[0.0, 0.0], [2.0, 4.0]]))
    assert traj.state_at(0.25) == pytest.approx((0.5, 1.0))


@settings(max_examples=30, deadline=None)
@given(
    k=st.floats(0.1, 5.0),
    x0=st.floats(-10.0, 10.0).filter(lambda v: abs(v) > 1e-3),
    t_end=st.floats(0.1, 5.0),
)
def test_exponential_property(k, x0, t_end):
    traj = integrate(lambda t, q: (-k * q[0], 0.0), State(0.0, (x0, 0.0)), t_end,
                     ToleranceConfig(rel_tol=1e-10, abs_tol=1e-14))
    assert traj.final.q[0] == pytest.approx(x0 * math.exp(-k * t_end), rel=1e-7)
