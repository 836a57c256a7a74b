"""Residence of strip orbits near the repulsive parts of x = +-1."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import optimize

from ..errors import InvalidParameter, NotFoundWithinBudget
from ..models import (
    ENHANCED_BRANCHES,
    UY,
    XY,
    chart_transform,
    log_dist_minus,
    log_dist_plus,
    make_enhanced_delay,
)
from ..ode import State, ToleranceConfig, integrate

REPULSIVE_BRANCHES = ("x=+1", "x=-1")


class Pass(NamedTuple):
    enter_t: float
    exit_t: float
    duration: float
    y_enter: float
    y_exit: float
    branch: str
    complete: bool  # False if the pass is cut by the start or end of the run


@dataclass
class DelayReport:
    delta: float
    branch: str
    passes: list = field(default_factory=list)

    @property
    def total_time(self) -> float:
        return float(sum(p.duration for p in self.passes))

    @property
    def durations(self) -> np.ndarray:
        return np.array([p.duration for p in self.passes])


def _band_fn(sign, delta, chart):
    log_delta = math.log(delta)
    if chart == UY:
        ld = log_dist_plus if sign > 0 else log_dist_minus
        return lambda q: log_delta - ld(q[0])
    return lambda q: delta - abs(q[0] - sign)


def _region_fn(sign):
    # positive on the repulsive part: y > 1 on x = 1, y < -1 on x = -1
    return lambda q: sign * (q[1] - sign)


def _refine(traj, fn, t0, t1):
    f0, f1 = fn(traj.q[_idx(traj, t0)]), fn(traj.q[_idx(traj, t1)])
    if f0 == 0:
        return t0
    if f1 == 0 or f0 * f1 > 0:
        return t1
    return optimize.brentq(lambda s: fn(traj.state_at(s)), t0, t1, xtol=1e-13 * max(1.0, t1))


def _idx(traj, t):
    return int(np.searchsorted(traj.t, t))


def _branch_passes(traj, sign, delta, branch_id):
    band = _band_fn(sign, delta, traj.chart)
    region = _region_fn(sign)
    q = traj.q
    gb = np.array([band(row) for row in q])
    gr = np.array([region(row) for row in q])
    inside = (gb > 0) & (gr > 0)
    passes = []
    ts = traj.t
    k, n = 0, len(ts)
    while k < n:
        if not inside[k]:
            k += 1
            continue
        start = k
        while k < n and inside[k]:
            k += 1
        end = k - 1  # last inside sample
        complete = True
        if start == 0:
            t_in = ts[0]
            complete = False
        else:
            a, b = ts[start - 1], ts[start]
            cands = []
            if gb[start - 1] <= 0:
                cands.append(_refine(traj, band, a, b))
            if gr[start - 1] <= 0:
                cands.append(_refine(traj, region, a, b))
            t_in = max(cands)
        if end == n - 1:
            t_out = ts[-1]
            complete = False
        else:
            a, b = ts[end], ts[end + 1]
            cands = []
            if gb[end + 1] <= 0:
                cands.append(_refine(traj, band, a, b))
            if gr[end + 1] <= 0:
                cands.append(_refine(traj, region, a, b))
            t_out = min(cands)
        if t_out > t_in:
            y_in = traj.state_at(t_in)[1]
            y_out = traj.state_at(t_out)[1]
            passes.append(Pass(
                float(t_in), float(t_out), float(t_out - t_in),
                float(y_in), float(y_out), branch_id, bool(complete),
            ))
    return passes


def delay_report(trajectory, branch: str, delta: float) -> DelayReport:
    """Residence intervals within ``delta`` of a repulsive branch.

    ``branch`` is ``"x=+1"`` (repulsive for y > 1), ``"x=-1"`` (repulsive
    for y < -1) or ``"any"`` to merge both in time order. On the strip chart
    distances are handled as log-distances, so ``delta`` may be far below
    double-precision resolution of ``1 - |x|``.
    """
    if not delta > 0:
        raise InvalidParameter(f"delta must be > 0, got {delta!r}")
    if branch == "any":
        ids = REPULSIVE_BRANCHES
    elif branch in REPULSIVE_BRANCHES:
        ids = (branch,)
    else:
        raise InvalidParameter(
            f"branch must be one of {REPULSIVE_BRANCHES + ('any',)}, got {branch!r}"
        )
    passes = []
    for b in ENHANCED_BRANCHES:
        if b.id in ids:
            passes.extend(_branch_passes(trajectory, b.sign, delta, b.id))
    passes.sort(key=lambda p: p.enter_t)
    return DelayReport(delta, branch, passes)


@dataclass
class DelayWitness:
    pass_index: int  # position among all passes (both branches, time order)
    witness: Pass
    passes: list
    crossings: int
    a_n: list


def verify_enhanced_delay(
    x0: float,
    y0: float,
    eps: float,
    delta: float,
    T: float,
    max_time: float | None = None,
    tol: ToleranceConfig | None = None,
) -> DelayWitness:
    """Run from the strip point (x0, y0) until one residence interval near a
    repulsive branch lasts longer than ``T``.

    Raises NotFoundWithinBudget once ``max_time`` (default ``1e4 / eps``) is
    reached without a witness; the exception carries the a_n seen so far.
    """
    if not abs(x0) < 1:
        raise InvalidParameter(f"need |x0| < 1, got {x0}")
    if not (delta > 0 and T >= 0):
        raise InvalidParameter("need delta > 0 and T >= 0")
    max_time = max_time if max_time is not None else 1e4 / eps
    tol = tol or ToleranceConfig()
    model = make_enhanced_delay(eps, UY, delta)
    state = State(0.0, chart_transform((x0, y0), XY, UY))
    chunk = 20.0 / eps
    traj = None
    while True:
        part = integrate(
            model.field, state, min(state.t + chunk, max_time), tol,
            model.standard_events, chart=UY,
        )
        traj = part if traj is None else traj.concat(part)
        report = delay_report(traj, "any", delta)
        done = traj.t[-1] >= max_time or part.termination != "time_limit"
        for i, p in enumerate(report.passes):
            if p.duration > T and (p.complete or done):
                crossings = traj.events_of("x0")
                return DelayWitness(
                    i, p, report.passes, len(crossings),
                    [abs(ev.state.q[1]) for ev in crossings],
                )
        if done:
            crossings = traj.events_of("x0")
            raise NotFoundWithinBudget(
                f"no residence longer than T={T} within t <= {traj.t[-1]:g}",
                crossings=len(crossings),
                a_n=[abs(ev.state.q[1]) for ev in crossings],
                passes=report.passes,
            )
        state = traj.final
        chunk *= 1.5
