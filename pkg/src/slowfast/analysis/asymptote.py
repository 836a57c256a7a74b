"""Orbits of the enhanced-delay system outside the strip |x| <= 1.

Starting on the diagonal with |x0| > 1, the orbit stays on one side of
y = x (above for x0 > 1) and the gap ``y - x`` tends to zero. Along the
orbit x grows like exp(eps t), and the gap relaxes at rate ``x^2 - 1``;
the system therefore becomes stiff as t grows and an explicit integrator
stops making progress well before x reaches double-precision limits. The
report records how far the run got.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import InvalidParameter
from ..models import XY, make_enhanced_delay
from ..ode import State, ToleranceConfig, integrate


@dataclass
class AsymptoteReport:
    x0: float
    y0: float
    eps: float
    alpha0: float
    half_bound: float  # 1 / (2 alpha0)
    full_bound: float  # 1 / alpha0, the bound from integrating the comparison ODE
    sup_gap: float  # sup of s (y - x) after the start, s = sign(x0)
    min_gap: float
    gap_at_end: float
    t_end: float  # last time reached
    horizon: float
    reached_horizon: bool
    termination: str
    gap_tail: np.ndarray  # rows (t, s (y - x)) over the last fifth of the run
    t: np.ndarray
    gap: np.ndarray

    @property
    def above_line(self) -> bool:
        return self.min_gap >= -1e-9

    @property
    def within_half_bound(self) -> bool:
        return self.sup_gap <= self.half_bound


def alpha(x: float, eps: float) -> float:
    return (x - 1.0 / x) / eps


def asymptote_check(
    x0: float, eps: float, horizon: float, tol: ToleranceConfig | None = None
) -> AsymptoteReport:
    """Integrate from (x0, x0), |x0| > 1, in the plane chart up to ``horizon``.

    Gaps are reported as ``sign(x0) * (y - x)`` so that the x0 < -1 run is the
    mirror image of the x0 > 1 run.
    """
    if not abs(x0) > 1:
        raise InvalidParameter(f"need |x0| > 1, got {x0}")
    if not horizon > 0:
        raise InvalidParameter("horizon must be > 0")
    tol = tol or ToleranceConfig(max_steps=500_000)
    model = make_enhanced_delay(eps, XY)
    traj = integrate(model.field, State(0.0, (x0, x0)), horizon, tol, chart=XY)
    s = math.copysign(1.0, x0)
    gap = s * (traj.q[:, 1] - traj.q[:, 0])
    t = traj.t
    a0 = alpha(abs(x0), eps)
    tail = t >= t[0] + 0.8 * (t[-1] - t[0])
    return AsymptoteReport(
        x0=x0,
        y0=x0,
        eps=eps,
        alpha0=a0,
        half_bound=1.0 / (2.0 * a0),
        full_bound=1.0 / a0,
        sup_gap=float(gap[1:].max()) if len(gap) > 1 else 0.0,
        min_gap=float(gap.min()),
        gap_at_end=float(gap[-1]),
        t_end=float(t[-1]),
        horizon=horizon,
        reached_horizon=bool(t[-1] >= horizon),
        termination=traj.termination,
        gap_tail=np.column_stack([t[tail], gap[tail]]),
        t=t,
        gap=gap,
    )
