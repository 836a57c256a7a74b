import math
import pickle

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slowfast.errors import InvalidParameter, OutOfChart
from slowfast.models import (
    ATTRACTING,
    DEGENERATE,
    REPELLING,
    STABLE,
    UNSTABLE,
    UY,
    VDP_FOLDS,
    XY,
    chart_transform,
    log_cosh,
    log_dist_minus,
    log_dist_plus,
    make_enhanced_delay,
    make_transcritical_dynamical,
    make_vdp_canard,
    static_equilibria,
    tanh_sat,
    vdp_f,
    vdp_fprime,
)

finite = st.floats(-50, 50, allow_nan=False)


@settings(max_examples=200)
@given(u=finite, y=finite)
def test_enhanced_field_is_odd(u, y):
    for chart, a in ((UY, u), (XY, u / 60)):
        f = make_enhanced_delay(0.03, chart).field
        fp, fm = f(0, (a, y)), f(0, (-a, -y))
        assert fm[0] == -fp[0] and fm[1] == -fp[1]


@settings(max_examples=200)
@given(x=st.floats(-0.999999, 0.999999), y=finite)
def test_chart_round_trip(x, y):
    u, yy = chart_transform((x, y), XY, UY)
    back = chart_transform((u, yy), UY, XY)
    assert back[1] == y
    assert back[0] == pytest.approx(x, abs=4e-16)


def test_chart_rejects_points_off_the_strip():
    for x in (1.0, -1.0, 1.5):
        with pytest.raises(OutOfChart):
            chart_transform((x, 0.0), XY, UY)
    with pytest.raises(ValueError):
        chart_transform((0.0, 0.0), XY, "polar")


def test_strip_chart_fields_agree():
    # chain rule: x' = (1 - x^2) u'
    xy, uy = make_enhanced_delay(0.1, XY).field, make_enhanced_delay(0.1, UY).field
    for x, y in [(0.3, -0.2), (-0.9, 1.4), (0.999, 0.5)]:
        u = math.atanh(x)
        du, dy_u = uy(0, (u, y))
        dx, dy_x = xy(0, (x, y))
        assert dx == pytest.approx((1 - x * x) * du, rel=1e-12)
        assert dy_u == pytest.approx(dy_x, rel=1e-12)


@pytest.mark.parametrize("u", [0.0, 0.5, -3.0, 19.0, 25.0, -400.0, 1e6])
def test_stable_helpers(u):
    import mpmath as mp

    mp.mp.dps = 50
    assert log_cosh(u) == pytest.approx(float(mp.log(mp.cosh(u))), rel=1e-14, abs=1e-300)
    # 1 -+ tanh u = 2 / (1 + e^{+-2u}), exact in extended precision
    assert log_dist_plus(u) == pytest.approx(float(mp.log(2 / (1 + mp.exp(2 * u)))), rel=1e-13)
    assert log_dist_minus(u) == pytest.approx(float(mp.log(2 / (1 + mp.exp(-2 * u)))), rel=1e-13, abs=1e-300)
    assert math.isfinite(log_cosh(u))
    assert abs(tanh_sat(u)) <= 1.0


def test_tanh_saturates_cleanly():
    assert tanh_sat(30.0) == 1.0 and tanh_sat(-30.0) == -1.0
    assert tanh_sat(0.3) == math.tanh(0.3)


def test_enhanced_branches():
    m = make_enhanced_delay(0.1)
    plus, minus, diag = m.branch("x=+1"), m.branch("x=-1"), m.branch("y=x")
    assert plus.stability(2.0) == REPELLING and plus.stability(0.0) == ATTRACTING
    assert minus.stability(-2.0) == REPELLING and minus.stability(0.0) == ATTRACTING
    assert diag.stability(0.5) == REPELLING and diag.stability(1.5) == ATTRACTING
    assert plus.repulsive_region(1.0, 1.2) and not plus.repulsive_region(1.0, 0.8)
    # transverse derivative against a finite difference of the fast field
    f = m.field if m.chart == XY else make_enhanced_delay(0.1, XY).field
    h = 1e-6
    for y in (-0.5, 1.7):
        fd = (f(0, (1 + h, y))[0] - f(0, (1 - h, y))[0]) / (2 * h)
        assert fd == pytest.approx(plus.transverse(y), rel=1e-6)
    with pytest.raises(KeyError):
        m.branch("nope")


def test_standard_events():
    m = make_enhanced_delay(0.1, UY, delta=0.05)
    assert {ev.id for ev in m.standard_events} == {"x0", "diag", "band+", "band-", "region+", "region-"}
    band = m.event("band+").g
    # positive within delta of x = 1, negative outside
    assert band(0, (math.atanh(0.97), 0.0)) > 0
    assert band(0, (math.atanh(0.9), 0.0)) < 0
    assert band(0, (math.atanh(0.95), 0.0)) == pytest.approx(0.0, abs=1e-12)
    diag = m.event("diag").g
    assert diag(0, (math.atanh(0.3), 0.3)) == pytest.approx(0.0, abs=1e-15)


def test_models_pickle():
    for m in (make_enhanced_delay(0.1), make_transcritical_dynamical(0.1), make_vdp_canard(0.1, -0.01)):
        f = pickle.loads(pickle.dumps(m.field))
        assert f(0, (0.3, 0.2)) == m.field(0, (0.3, 0.2))
        for ev in m.standard_events:
            g = pickle.loads(pickle.dumps(ev.g))
            assert g(0, (0.3, 0.2)) == ev.g(0, (0.3, 0.2))


@pytest.mark.parametrize("eps", [0.0, -1.0, math.nan, math.inf])
def test_bad_eps(eps):
    with pytest.raises(InvalidParameter):
        make_enhanced_delay(eps)
    with pytest.raises(InvalidParameter):
        make_vdp_canard(eps, 0.0)


def test_vdp_model():
    m = make_vdp_canard(0.1, -0.01)
    for x in VDP_FOLDS:
        assert vdp_fprime(x) == 0
    br = m.branch("critical")
    assert br.stability(-1.0) == REPELLING
    assert br.stability(1.0) == ATTRACTING and br.stability(-3.0) == ATTRACTING
    # the equilibrium (c, f(c)) is a rest point
    dx, dy = m.field(0, (-0.01, vdp_f(-0.01)))
    assert dx == pytest.approx(0, abs=1e-15) and dy == 0
    # Hopf at c = 0: the trace of the Jacobian at (c, f(c)) is -f'(c)/eps, zero there
    assert -vdp_fprime(0.0) / 0.1 == 0
    assert -vdp_fprime(-0.01) / 0.1 > 0  # unstable focus for small negative c


@pytest.mark.parametrize(
    "lam, expected",
    [
        (1.0, ((0.0, STABLE), (1.0, UNSTABLE))),
        (-0.5, ((0.0, UNSTABLE), (-0.5, STABLE))),
        (0.0, ((0.0, DEGENERATE),)),
    ],
)
def test_static_equilibria(lam, expected):
    assert static_equilibria(lam).equilibria == expected


def test_static_equilibria_match_linearization():
    for lam in np.linspace(-2, 2, 9):
        if lam == 0:
            continue
        for x, stab in static_equilibria(lam).equilibria:
            assert -lam * x + x * x == pytest.approx(0, abs=1e-15)
            slope = -lam + 2 * x
            assert stab == (STABLE if slope < 0 else UNSTABLE)
