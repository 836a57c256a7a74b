import numpy as np
import pytest

from slowfast.analysis.crossings import (
    CrossingReport,
    a_n_growth,
    crossing_sequences,
    simulate_strip,
)
from slowfast.analysis.lyapunov import w_strip
from slowfast.errors import InsufficientData, InvalidParameter, MalformedTrajectory
from slowfast.ode import Trajectory


def test_crossing_identities(strip_report):
    rep = strip_report
    assert len(rep) >= 20
    assert rep.interleaved
    assert rep.signs_alternate() and rep.n0 == 0
    assert np.all(rep.res_w_tn < 1e-9)
    assert np.all(rep.res_w_theta < 1e-9)
    assert np.all(rep.res_telescoping < 1e-6)
    assert rep.ineq_square.all() and rep.ineq_sum.all()


def test_a_n_is_w_at_crossing(strip_run, strip_report):
    ev = strip_run.events_of("x0")[3]
    u, y = ev.state.q[0], ev.state.q[1]
    assert abs(u) < 1e-9
    assert strip_report.a_n[3] ** 2 == pytest.approx(w_strip(u, y, 0.01), rel=1e-9)


def test_diagonal_value_is_saturated_but_log_is_exact(strip_report):
    # xi_n is within 1e-16 of +-1 so 1 - xi_n^2 rounds to 0; the log form survives
    assert np.all(np.abs(strip_report.xi_n) <= 1)
    assert np.all(np.isfinite(strip_report.log_one_minus_xi2))
    assert np.all(strip_report.log_one_minus_xi2 < -10)


def test_growth_approaches_two(strip_report):
    fit = a_n_growth(strip_report)
    assert fit.monotone
    assert fit.max_deviation_from(2.0, n_min=10) < 1e-4
    assert abs(fit.slope) < 1e-2


def test_mirror_orbit(strip_report, mirror_report):
    assert mirror_report.n0 == 1
    np.testing.assert_allclose(mirror_report.t_n, strip_report.t_n, rtol=0, atol=1e-9)
    np.testing.assert_allclose(mirror_report.a_n, strip_report.a_n, rtol=0, atol=1e-9)


def test_truncated_report(strip_report):
    short = strip_report.truncated(5)
    assert len(short) == 5 and len(short.theta_n) == 4
    assert short.interleaved


def test_constant_a_n_fails_monotonicity():
    z = np.zeros(6)
    rep = CrossingReport(
        0.01, 0, np.arange(6.0), np.full(6, 3.0), np.array([3.0, -3, 3, -3, 3, -3]),
        z[:5], z[:5], z[:5], z[:5], z, z, z[:5], z[:5],
        np.ones(5, bool), np.ones(5, bool),
    )
    fit = a_n_growth(rep)
    assert not fit.monotone
    with pytest.raises(InsufficientData):
        a_n_growth(rep.truncated(3))
    with pytest.raises(InsufficientData):
        fit.max_deviation_from(2.0, n_min=50)


def test_no_crossings_gives_empty_report():
    traj = simulate_strip(0.5, 0.0, 0.01, t_end=10.0)
    assert len(crossing_sequences(traj, 0.01)) == 0


def test_missing_quadrature_is_rejected(strip_run):
    bare = Trajectory(strip_run.chart, strip_run.t, strip_run.q[:, :2], strip_run.events)
    with pytest.raises(MalformedTrajectory):
        crossing_sequences(bare, 0.01)


def test_missing_diagonal_crossing_is_rejected(strip_run):
    events = [ev for ev in strip_run.events if not (ev.event_id == "diag" and ev.t_event > 1000)]
    broken = Trajectory(strip_run.chart, strip_run.t, strip_run.q, events)
    with pytest.raises(MalformedTrajectory, match="diagonal"):
        crossing_sequences(broken, 0.01)


def test_strip_start_must_be_inside():
    with pytest.raises(InvalidParameter):
        simulate_strip(1.0, 0.0, 0.01, t_end=1.0)
    with pytest.raises(ValueError):
        simulate_strip(0.5, 0.0, 0.01)
