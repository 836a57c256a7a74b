"""Lyapunov monitors for the enhanced-delay system.

On the strip, ``Phi(u, y) = (tanh u - y)^2 / 2 + eps ln cosh u`` grows along
the flow with ``dPhi/dt = (u'/cosh u)^2``. In the plane chart the same
quantity is ``w(x, y) = (x - y)^2 - eps ln|1 - x^2| = 2 Phi`` with
``dw/dt = 2 (1 - x^2)(x - y)^2`` (fast time).

Orbits press exponentially close to x = +-1, where the plane chart can no
longer resolve ln(1 - x^2); long monotonicity checks belong on the strip.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import SingularLog
from ..models import UY, log_cosh


def phi(u: float, y: float, eps: float) -> float:
    a = math.tanh(u) - y
    return 0.5 * a * a + eps * log_cosh(u)


def log_abs_one_minus_x2(x: float) -> float:
    if abs(x) < 1:
        return math.log1p(-x) + math.log1p(x)
    if abs(x) == 1:
        raise SingularLog("w is singular on the lines x = +-1")
    return math.log(abs(x) - 1.0) + math.log(abs(x) + 1.0)


def w(x: float, y: float, eps: float) -> float:
    d = x - y
    return d * d - eps * log_abs_one_minus_x2(x)


def w_strip(u: float, y: float, eps: float) -> float:
    """w evaluated through the strip chart, i.e. 2 Phi(u, y)."""
    return 2.0 * phi(u, y, eps)


def phi_rate(u: float, y: float) -> float:
    """Analytic dPhi/dt = (u' / cosh u)^2 with u' = tanh u - y."""
    udot = math.tanh(u) - y
    sech = math.exp(-log_cosh(u))
    return (udot * sech) ** 2


def w_rate(x: float, y: float) -> float:
    d = x - y
    return 2.0 * (1.0 - x * x) * d * d


@dataclass
class LyapunovSeries:
    kind: str  # "phi" or "w"
    t: np.ndarray
    value: np.ndarray
    rate: np.ndarray  # analytic time derivative at each sample
    worst_decrease: float  # largest drop between consecutive samples (0 if none)
    slack: float

    @property
    def monotone(self) -> bool:
        return self.worst_decrease <= self.slack


def lyapunov_series(trajectory, eps: float, kind: str | None = None, slack: float = 1e-12):
    """Evaluate the Lyapunov function along ``trajectory``.

    ``kind`` defaults to ``"phi"`` on the strip chart and ``"w"`` in the
    plane; ``"w"`` is also accepted on the strip (computed as ``2 Phi``).
    """
    kind = kind or ("phi" if trajectory.chart == UY else "w")
    if kind not in ("phi", "w"):
        raise ValueError(f"unknown kind {kind!r}")
    q = trajectory.q
    a, y = q[:, 0], q[:, 1]
    if trajectory.chart == UY:
        vals = np.array([phi(ui, yi, eps) for ui, yi in zip(a, y)])
        rates = np.array([phi_rate(ui, yi) for ui, yi in zip(a, y)])
        if kind == "w":
            vals, rates = 2 * vals, 2 * rates
    else:
        if kind == "phi":
            raise ValueError("Phi needs the strip chart; use kind='w'")
        vals = np.array([w(xi, yi, eps) for xi, yi in zip(a, y)])
        rates = np.array([w_rate(xi, yi) for xi, yi in zip(a, y)])
    drops = -np.diff(vals)
    worst = float(max(drops.max(), 0.0)) if len(drops) else 0.0
    return LyapunovSeries(kind, trajectory.t.copy(), vals, rates, worst, slack)
