"""Closed-form solution of the slowly swept transcritical bifurcation.

With ``y(t) = y0 - eps t`` the fast equation ``x' = -y x + x^2`` is of
Bernoulli type and integrates to

    x(t) = x0 exp(-Y(t)) / (1 - x0 I(t)),
    Y(t) = -eps t^2 / 2 + y0 t,
    I(t) = int_0^t exp(-Y(s)) ds.

``exp(-Y)`` is 1 at both ends of ``[0, 2 y0 / eps]`` and dips to
``exp(-y0^2 / (2 eps))`` in the middle; beyond the window it grows like a
Gaussian. ``I`` is therefore computed in shifted form
``I = exp(M) * int exp(-Y - M)`` with ``M`` the largest exponent on the
interval, and ``x`` is assembled in log space.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from ..errors import BlowUp, InvalidParameter, OracleMismatch
from ..models import make_transcritical_dynamical
from ..ode import State, ToleranceConfig
from ..ode import integrate as ode_integrate

_QUAD_OPTS = dict(epsabs=0.0, epsrel=1e-13, limit=400)


@dataclass(frozen=True)
class BernoulliEval:
    x0: float
    y0: float
    eps: float
    t: float
    Y: float
    I: float  # inf when exp(log_I) overflows
    log_I: float
    x: float
    log_x: float  # log|x|; -inf for x0 == 0


def sweep_exponent(y0, eps, t):
    """Y(t) = -eps t^2/2 + y0 t."""
    return -0.5 * eps * t * t + y0 * t


def _log_segment(y0, eps, a, b):
    """log of int_a^b exp(-Y(s)) ds for a < b."""
    m = max(-sweep_exponent(y0, eps, a), -sweep_exponent(y0, eps, b))
    s_min = y0 / eps  # exp(-Y) is smallest here; -Y is convex
    pts = [s_min] if a < s_min < b else None
    val, _ = integrate.quad(
        lambda s: math.exp(-sweep_exponent(y0, eps, s) - m), a, b, points=pts, **_QUAD_OPTS
    )
    return m + math.log(val)


def log_sweep_integral(y0: float, eps: float, t: float) -> float:
    """log I(t); -inf at t = 0."""
    if t == 0:
        return -math.inf
    return _log_segment(y0, eps, 0.0, t)


def _check(x0, y0, eps):
    for name, v in (("x0", x0), ("y0", y0), ("eps", eps)):
        if not math.isfinite(v):
            raise InvalidParameter(f"{name} must be finite, got {v!r}")
    if not eps > 0:
        raise InvalidParameter(f"eps must be > 0, got {eps!r}")


def _assemble(x0, y0, eps, t, log_I) -> BernoulliEval:
    Y = sweep_exponent(y0, eps, t)
    I = math.exp(log_I) if log_I < 709 else math.inf
    if x0 == 0:
        return BernoulliEval(x0, y0, eps, t, Y, I, log_I, 0.0, -math.inf)
    # log(x0 I) decides blow-up without forming I
    log_x0I = math.log(abs(x0)) + log_I
    if x0 > 0:
        if log_x0I >= 0:
            raise BlowUp(*blowup_bracket(x0, y0, eps, t))
        log_den = math.log(-math.expm1(log_x0I))
    else:
        log_den = math.log1p(math.exp(log_x0I)) if log_x0I < 709 else log_x0I
    log_x = math.log(abs(x0)) - Y - log_den
    x = math.copysign(math.exp(log_x), x0)
    return BernoulliEval(x0, y0, eps, t, Y, I, log_I, x, log_x)


def bernoulli_solution(x0: float, y0: float, eps: float, t: float) -> BernoulliEval:
    """Evaluate the closed-form solution at time ``t``.

    Raises BlowUp when the denominator ``1 - x0 I`` vanishes before ``t``.
    """
    _check(x0, y0, eps)
    if not t >= 0:
        raise InvalidParameter(f"t must be >= 0, got {t!r}")
    return _assemble(x0, y0, eps, float(t), log_sweep_integral(y0, eps, t))


def bernoulli_series(x0, y0, eps, ts) -> list:
    """Closed form at increasing times ``ts``, accumulating I segment by segment."""
    _check(x0, y0, eps)
    out = []
    log_I, prev = -math.inf, 0.0
    for t in ts:
        t = float(t)
        if t < prev:
            raise InvalidParameter("times must be non-decreasing and >= 0")
        if t > prev:
            log_I = float(np.logaddexp(log_I, _log_segment(y0, eps, prev, t)))
            prev = t
        out.append(_assemble(x0, y0, eps, t, log_I))
    return out


def blowup_bracket(x0, y0, eps, t_max, xtol=1e-12):
    """Bracket the time where ``x0 I(t) = 1`` inside ``(0, t_max]``."""

    def h(s):
        return math.log(x0) + log_sweep_integral(y0, eps, s) if s > 0 else -1e300

    root = optimize.brentq(h, 0.0, t_max, xtol=xtol * max(1.0, t_max), rtol=1e-15)
    width = xtol * max(1.0, t_max)
    return (max(0.0, root - width), min(t_max, root + width))


@dataclass
class TranscriticalDelayReport:
    x0: float
    y0: float
    eps: float
    t: np.ndarray
    x_numeric: np.ndarray
    x_closed: np.ndarray
    rel_err: np.ndarray
    max_rel_err: float
    max_x: float  # over samples strictly inside (0, 2 y0/eps)
    x_at_turn: float  # closed form at t = y0/eps, where y crosses 0
    t_exit: float  # first time x climbs back to x0 (closed form)
    delay_holds: bool  # max_x < x0
    termination: str


def _exit_time(x0, y0, eps, t_end):
    def h(s):
        ev = bernoulli_solution(x0, y0, eps, s)
        return ev.log_x - math.log(x0)

    lo = y0 / eps
    if h(t_end) < 0:
        return math.inf
    return optimize.brentq(h, lo, t_end, xtol=1e-12 * t_end, rtol=1e-15)


def verify_transcritical_delay(
    x0: float, y0: float, eps: float, tol: float = 1e-6, tolerances: ToleranceConfig | None = None
) -> TranscriticalDelayReport:
    """Integrate the swept transcritical system over ``[0, 2 y0/eps]`` and
    compare with the closed form at every sample.

    Raises OracleMismatch if the largest relative difference exceeds ``tol``.
    """
    _check(x0, y0, eps)
    if not 0 < x0 < y0 / 2:
        raise InvalidParameter(f"need 0 < x0 < y0/2, got x0={x0}, y0={y0}")
    # x sinks to ~x0 exp(-y0^2/(2 eps)); only relative control makes sense
    tolerances = tolerances or ToleranceConfig(rel_tol=1e-11, abs_tol=1e-300)
    model = make_transcritical_dynamical(eps)
    t_end = 2 * y0 / eps
    traj = ode_integrate(
        model.field, State(0.0, (x0, y0)), t_end, tolerances, [model.event("y0")]
    )
    ts = traj.t
    closed = bernoulli_series(x0, y0, eps, ts)
    xc = np.array([ev.x for ev in closed])
    xn = traj.q[:, 0]
    rel = np.abs(xn - xc) / np.abs(xc)
    max_rel = float(rel.max())
    inner = (ts > 0) & (ts < t_end)
    max_x = float(xn[inner].max()) if inner.any() else float(x0)
    report = TranscriticalDelayReport(
        x0=x0,
        y0=y0,
        eps=eps,
        t=ts,
        x_numeric=xn,
        x_closed=xc,
        rel_err=rel,
        max_rel_err=max_rel,
        max_x=max_x,
        x_at_turn=bernoulli_solution(x0, y0, eps, y0 / eps).x,
        t_exit=_exit_time(x0, y0, eps, t_end),
        delay_holds=max_x < x0,
        termination=traj.termination,
    )
    if max_rel > tol:
        raise OracleMismatch(
            f"numeric and closed-form solutions differ by {max_rel:.3g} (> {tol:g})",
            max_error=max_rel,
        )
    return report
