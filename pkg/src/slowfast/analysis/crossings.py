"""Crossing sequences of strip orbits of the enhanced-delay system.

A strip orbit crosses x = 0 at times t_0 < t_1 < ... with
``y(t_n) = (-1)^n a_n`` and meets the diagonal y = x once in between, at
theta_n. ``w`` is non-decreasing, so ``a_n^2 = w(t_n)`` grows, and the
increments are ``a_{n+1}^2 - a_n^2 = 2 eps int_{t_n}^{t_{n+1}} x^2 dt``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from ..errors import InsufficientData, InvalidParameter, MalformedTrajectory
from ..models import UY, XY, chart_transform, log_cosh, make_enhanced_delay, tanh_sat
from ..ode import State, ToleranceConfig, integrate
from .lyapunov import w, w_strip


def _x_squared_rate(eps, t, q):
    x = tanh_sat(q[0])
    return 2.0 * eps * x * x


def _x_squared_rate_xy(eps, t, q):
    return 2.0 * eps * q[0] * q[0]


def simulate_strip(
    x0: float,
    y0: float,
    eps: float,
    t_end: float | None = None,
    n_crossings: int | None = None,
    tol: ToleranceConfig | None = None,
    delta: float = 0.05,
    chart: str = UY,
    max_time: float | None = None,
):
    """Run the enhanced-delay system from the strip point (x0, y0).

    The run carries ``2 eps int x^2 dt`` as a quadrature column and records
    the model's standard events. Either integrate to ``t_end`` or until
    ``n_crossings`` crossings of x = 0 have been seen (plus the stretch up to
    the next one, so the last increment is complete), bounded by ``max_time``.
    """
    if not abs(x0) < 1:
        raise InvalidParameter(f"strip start needs |x0| < 1, got {x0}")
    if (t_end is None) == (n_crossings is None):
        raise ValueError("give exactly one of t_end and n_crossings")
    model = make_enhanced_delay(eps, chart, delta)
    tol = tol or ToleranceConfig()
    start = chart_transform((x0, y0), XY, chart)
    rate = partial(_x_squared_rate if chart == UY else _x_squared_rate_xy, eps)
    events = model.standard_events
    if t_end is not None:
        return integrate(
            model.field, State(0.0, start), t_end, tol, events, chart=chart, quadrature=rate
        )

    max_time = max_time if max_time is not None else 1e4 / eps
    chunk = 20.0 / eps
    traj = None
    state = State(0.0, start)
    while True:
        part = integrate(
            model.field, state, min(state.t + chunk, max_time), tol, events,
            chart=chart, quadrature=rate,
        )
        traj = part if traj is None else traj.concat(part)
        if len(traj.events_of("x0")) >= n_crossings or part.termination != "time_limit":
            break
        if traj.t[-1] >= max_time:
            traj.termination = "step_budget"
            break
        state = traj.final
        chunk *= 1.5
    return traj


@dataclass
class CrossingReport:
    eps: float
    n0: int  # index of the first crossing so that y(t_n) = (-1)^n a_n
    t_n: np.ndarray
    a_n: np.ndarray
    y_tn: np.ndarray
    theta_n: np.ndarray  # theta_n lies in (t_n, t_{n+1}); one fewer than t_n
    u_theta: np.ndarray  # strip coordinate at theta_n (xi_n = tanh u)
    xi_n: np.ndarray
    log_one_minus_xi2: np.ndarray
    quad_tn: np.ndarray  # 2 eps int_0^{t_n} x^2 dt
    res_w_tn: np.ndarray  # |a_n^2 - w(t_n)| / a_n^2
    res_w_theta: np.ndarray  # |w(theta_n) + eps ln(1 - xi_n^2)| / |w(theta_n)|
    res_telescoping: np.ndarray  # relative, per n
    ineq_square: np.ndarray  # a_{n+1}^2 - a_n^2 <= 2 eps (t_{n+1} - t_n)
    ineq_sum: np.ndarray  # a_n + a_{n+1} <= eps (t_{n+1} - t_n)
    interleaved: bool = True
    notes: list = field(default_factory=list)

    def __len__(self):
        return len(self.t_n)

    @property
    def n(self) -> np.ndarray:
        return self.n0 + np.arange(len(self.t_n))

    def signs_alternate(self) -> bool:
        expected = np.where(self.n % 2 == 0, 1.0, -1.0)
        return bool(np.all(np.sign(self.y_tn) == expected))

    def truncated(self, count: int) -> "CrossingReport":
        """Keep the first ``count`` crossings (and the gaps between them)."""
        k = count
        return CrossingReport(
            eps=self.eps, n0=self.n0, t_n=self.t_n[:k], a_n=self.a_n[:k],
            y_tn=self.y_tn[:k], theta_n=self.theta_n[: k - 1],
            u_theta=self.u_theta[: k - 1], xi_n=self.xi_n[: k - 1],
            log_one_minus_xi2=self.log_one_minus_xi2[: k - 1],
            quad_tn=self.quad_tn[:k], res_w_tn=self.res_w_tn[:k],
            res_w_theta=self.res_w_theta[: k - 1],
            res_telescoping=self.res_telescoping[: k - 1],
            ineq_square=self.ineq_square[: k - 1], ineq_sum=self.ineq_sum[: k - 1],
            interleaved=self.interleaved, notes=list(self.notes),
        )


def _empty(eps):
    z = np.zeros(0)
    zb = np.zeros(0, dtype=bool)
    return CrossingReport(eps, 0, z, z, z, z, z, z, z, z, z, z, z, zb, zb)


def crossing_sequences(trajectory, eps: float) -> CrossingReport:
    """Extract t_n, a_n, theta_n, xi_n and check the w identities.

    The trajectory must come from ``simulate_strip`` (or otherwise carry the
    ``x0`` and ``diag`` events plus the ``2 eps int x^2`` quadrature column).
    """
    strip = trajectory.chart == UY
    t_events = trajectory.events_of("x0")
    d_events = trajectory.events_of("diag")
    if not t_events:
        return _empty(eps)
    if trajectory.q.shape[1] < 3:
        raise MalformedTrajectory("trajectory lacks the 2 eps int x^2 quadrature column")

    t_n = np.array([ev.t_event for ev in t_events])
    if np.any(np.diff(t_n) <= 0):
        raise MalformedTrajectory("x = 0 crossing times are not increasing")
    y_tn = np.array([ev.state.q[1] for ev in t_events])
    if np.any(y_tn == 0):
        raise MalformedTrajectory("orbit crosses x = 0 at y = 0")
    a_n = np.abs(y_tn)
    quad = np.array([ev.state.q[2] for ev in t_events])
    n0 = 0 if y_tn[0] > 0 else 1

    thetas, states = [], []
    for k in range(len(t_n) - 1):
        inside = [ev for ev in d_events if t_n[k] < ev.t_event < t_n[k + 1]]
        if len(inside) != 1:
            raise MalformedTrajectory(
                f"expected one diagonal crossing between t_{k} and t_{k + 1}, found {len(inside)}"
            )
        thetas.append(inside[0].t_event)
        states.append(inside[0].state.q)
    theta_n = np.array(thetas)

    if strip:
        u_theta = np.array([q[0] for q in states])
        w_theta = np.array([w_strip(q[0], q[1], eps) for q in states])
        w_tn = np.array([w_strip(ev.state.q[0], ev.state.q[1], eps) for ev in t_events])
    else:
        u_theta = np.array([math.atanh(q[0]) for q in states])
        w_theta = np.array([w(q[0], q[1], eps) for q in states])
        w_tn = np.array([w(ev.state.q[0], ev.state.q[1], eps) for ev in t_events])
    xi_n = np.tanh(u_theta)
    # ln(1 - tanh^2 u) = -2 ln cosh u, exact even where tanh u rounds to +-1
    log1mxi2 = np.array([-2.0 * log_cosh(u) for u in u_theta])

    a2 = a_n * a_n
    da2 = np.diff(a2)
    dt = np.diff(t_n)
    dquad = np.diff(quad)
    return CrossingReport(
        eps=eps,
        n0=n0,
        t_n=t_n,
        a_n=a_n,
        y_tn=y_tn,
        theta_n=theta_n,
        u_theta=u_theta,
        xi_n=xi_n,
        log_one_minus_xi2=log1mxi2,
        quad_tn=quad,
        res_w_tn=np.abs(a2 - w_tn) / a2,
        res_w_theta=np.abs(w_theta + eps * log1mxi2) / np.abs(w_theta),
        res_telescoping=np.abs(da2 - dquad) / np.abs(da2),
        ineq_square=da2 <= 2 * eps * dt,
        ineq_sum=a_n[:-1] + a_n[1:] <= eps * dt,
        interleaved=bool(np.all(t_n[:-1] < theta_n) and np.all(theta_n < t_n[1:])),
    )


@dataclass
class GrowthFit:
    n: np.ndarray  # index of the left end of each increment
    increments: np.ndarray  # a_{n+1} - a_n
    monotone: bool
    slope: float  # least-squares slope of the increments against n
    intercept: float

    def max_deviation_from(self, target: float = 2.0, n_min: int = 10) -> float:
        """Largest relative deviation of the increments from ``target`` for n >= n_min."""
        sel = self.n >= n_min
        if not sel.any():
            raise InsufficientData(f"no increments with n >= {n_min}")
        return float(np.max(np.abs(self.increments[sel] - target)) / target)


def a_n_growth(report: CrossingReport, min_crossings: int = 5) -> GrowthFit:
    """Increments of a_n; they approach 2 because x^2 is close to 1 away from
    the fast transitions, so a_{n+1}^2 - a_n^2 ~ 2 (a_n + a_{n+1})."""
    if len(report) < min_crossings:
        raise InsufficientData(f"need >= {min_crossings} crossings, got {len(report)}")
    inc = np.diff(report.a_n)
    n = report.n[:-1]
    slope, intercept = np.polyfit(n.astype(float), inc, 1)
    return GrowthFit(n, inc, bool(np.all(inc > 0)), float(slope), float(intercept))
