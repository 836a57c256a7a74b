import math

import mpmath as mp
import numpy as np
import pytest
from scipy.special import dawsn

from slowfast.analysis.bernoulli import (
    bernoulli_series,
    bernoulli_solution,
    blowup_bracket,
    log_sweep_integral,
    verify_transcritical_delay,
)
from slowfast.errors import BlowUp, InvalidParameter, OracleMismatch


def dawson_I(y0, eps, t):
    """int_0^t exp(-Y) ds through Dawson's function; independent of quadrature."""
    s1 = math.sqrt(eps / 2) * (t - y0 / eps)
    Y = y0 * t - eps * t * t / 2
    return math.sqrt(2 / eps) * (math.exp(-Y) * dawsn(s1) + dawsn(y0 / math.sqrt(2 * eps)))


def mp_I(y0, eps, t):
    mp.mp.dps = 40
    f = lambda s: mp.exp(eps * s * s / 2 - y0 * s)
    return mp.quad(f, [0, min(t, y0 / eps), t] if t > y0 / eps else [0, t])


@pytest.mark.parametrize("eps", [0.1, 0.05, 0.02, 0.01])
@pytest.mark.parametrize("frac", [0.01, 0.3, 0.5, 0.99, 1.0, 1.5, 2.0])
def test_sweep_integral_matches_dawson(eps, frac):
    y0 = 1.0
    t = frac * 2 * y0 / eps
    assert math.exp(log_sweep_integral(y0, eps, t)) == pytest.approx(dawson_I(y0, eps, t), rel=1e-11)


@pytest.mark.parametrize("eps, t", [(0.01, 150.0), (0.005, 399.0), (0.02, 100.0)])
def test_sweep_integral_matches_extended_precision(eps, t):
    assert math.exp(log_sweep_integral(1.0, eps, t)) == pytest.approx(float(mp_I(1.0, eps, t)), rel=1e-11)


def test_log_integral_survives_huge_exponents():
    # at eps = 1e-3 the integrand spans e^{-500}..e^{0}; beyond 2 y0/eps it overflows
    li = log_sweep_integral(1.0, 1e-3, 2500.0)
    assert math.isfinite(li)
    expected = float(mp.log(mp_I(1.0, 1e-3, 2500.0)))
    assert li == pytest.approx(expected, rel=1e-11)


def test_solution_solves_the_ode():
    x0, y0, eps = 0.2, 1.0, 0.05
    h = 1e-4
    for t in (1.0, 10.0, 20.0, 35.0):
        xm = bernoulli_solution(x0, y0, eps, t - h).x
        xp = bernoulli_solution(x0, y0, eps, t + h).x
        x = bernoulli_solution(x0, y0, eps, t).x
        y = y0 - eps * t
        assert (xp - xm) / (2 * h) == pytest.approx(-y * x + x * x, rel=1e-6)


def test_series_matches_pointwise():
    ts = np.linspace(0, 40, 17)
    series = bernoulli_series(0.1, 1.0, 0.05, ts)
    for ev, t in zip(series, ts):
        assert ev.x == pytest.approx(bernoulli_solution(0.1, 1.0, 0.05, t).x, rel=1e-11)
    with pytest.raises(InvalidParameter):
        bernoulli_series(0.1, 1.0, 0.05, [1.0, 0.5])


def test_zero_and_negative_initial_data():
    assert bernoulli_solution(0.0, 1.0, 0.1, 5.0).x == 0.0
    ev = bernoulli_solution(-0.3, 1.0, 0.1, 20.0)
    assert ev.x < 0


def test_blow_up_is_bracketed():
    x0, y0, eps = 0.9, 1.0, 0.1
    with pytest.raises(BlowUp) as info:
        bernoulli_solution(x0, y0, eps, 20.0)
    lo, hi = info.value.bracket
    # 1 - x0 I changes sign inside the bracket
    assert 1 - x0 * dawson_I(y0, eps, lo) > -1e-9
    assert 1 - x0 * dawson_I(y0, eps, hi) < 1e-9
    assert hi - lo < 1e-9
    assert blowup_bracket(x0, y0, eps, 20.0) == pytest.approx((lo, hi))


def test_rejects_bad_arguments():
    with pytest.raises(InvalidParameter):
        bernoulli_solution(0.1, 1.0, 0.0, 1.0)
    with pytest.raises(InvalidParameter):
        bernoulli_solution(0.1, 1.0, 0.1, -1.0)
    with pytest.raises(InvalidParameter):
        verify_transcritical_delay(0.6, 1.0, 0.1)


def test_verify_reports_oracle_agreement():
    rep = verify_transcritical_delay(0.1, 1.0, 0.05)
    assert rep.max_rel_err < 1e-8
    assert rep.termination == "time_limit"
    assert rep.t[-1] == pytest.approx(40.0)
    # x sinks far below x0 at the turn, then climbs back above x0 just before 2 y0/eps
    assert rep.x_at_turn < 1e-3 * 0.1
    assert 0.9 * 40 < rep.t_exit < 40
    assert rep.x_closed[-1] == pytest.approx(0.1 / (1 - 0.1 * dawson_I(1.0, 0.05, 40.0)), rel=1e-9)


def test_verify_raises_on_mismatch():
    with pytest.raises(OracleMismatch) as info:
        verify_transcritical_delay(0.1, 1.0, 0.1, tol=1e-18)
    assert info.value.max_error > 0
