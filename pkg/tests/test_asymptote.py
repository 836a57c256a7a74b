import numpy as np
import pytest

from slowfast.analysis.asymptote import alpha, asymptote_check
from slowfast.errors import InvalidParameter


@pytest.fixture(scope="module")
def short_run():
    return asymptote_check(3.0, 0.1, 20.0)


def test_alpha():
    assert alpha(3.0, 0.1) == pytest.approx(26.666666666666664)


def test_orbit_stays_above_diagonal(short_run):
    rep = short_run
    assert rep.reached_horizon and rep.termination == "time_limit"
    assert rep.above_line and rep.min_gap >= 0
    assert rep.alpha0 == pytest.approx(alpha(3.0, 0.1))
    # the comparison argument gives y - x <= 1 / alpha0
    assert rep.sup_gap <= rep.full_bound
    tail = rep.gap_tail
    assert np.all(np.diff(tail[:, 0]) > 0)
    assert np.all(np.diff(tail[:, 1]) < 0)


def test_gap_tracks_quasi_steady_value(short_run):
    # after the initial layer, y - x ~ eps x / (x^2 - 1)
    rep = short_run
    i = -1
    x = 3.0 * np.exp(0.1 * rep.t[i])
    assert rep.gap[i] == pytest.approx(0.1 * x / (x * x - 1), rel=0.05)


def test_mirror(short_run):
    mirror = asymptote_check(-3.0, 0.1, 20.0)
    assert len(mirror.gap) == len(short_run.gap)
    np.testing.assert_allclose(mirror.gap, short_run.gap, atol=1e-9)


def test_budget_is_reported_not_hidden():
    from slowfast.ode import ToleranceConfig

    rep = asymptote_check(3.0, 0.1, 200.0, ToleranceConfig(max_steps=2000))
    assert not rep.reached_horizon
    assert rep.termination == "step_budget"
    assert rep.t_end < 200.0


@pytest.mark.parametrize("x0", [1.0, 0.5, -1.0])
def test_precondition(x0):
    with pytest.raises(InvalidParameter):
        asymptote_check(x0, 0.1, 10.0)
