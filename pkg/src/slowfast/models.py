"""Planar systems studied in this package, with their charts and branches.

Three vector fields live here:

* the dynamical transcritical bifurcation ``x' = -y x + x^2, y' = -eps``;
* the enhanced-delay system ``x' = (1 - x^2)(x - y), y' = eps x``, either in
  the plane (chart ``"XY"``) or on the open strip ``|x| < 1`` through
  ``x = tanh u`` (chart ``"UY"``);
* the van der Pol canard system ``eps x' = y - x^3/3 - x^2, y' = c - x``.

Fields are small picklable callables so that models can be shipped to worker
processes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from types import MappingProxyType
from typing import Callable

from .errors import InvalidParameter, OutOfChart
from .ode import ANY, EventSpec

XY, UY = "XY", "UY"

ATTRACTING, REPELLING, NEUTRAL = "attracting", "repelling", "neutral"
STABLE, UNSTABLE, DEGENERATE = "stable", "unstable", "degenerate"

# beyond this |u|, tanh(u) equals +-1 to within 1e-17
TANH_SATURATION = 20.0
LN2 = math.log(2.0)


# ---------------------------------------------------------------------------
# numerically stable helpers for the strip chart


def tanh_sat(u: float) -> float:
    if u > TANH_SATURATION:
        return 1.0
    if u < -TANH_SATURATION:
        return -1.0
    return math.tanh(u)


def log_cosh(u: float) -> float:
    a = abs(u)
    return a - LN2 + math.log1p(math.exp(-2.0 * a))


def _softplus(z: float) -> float:
    return max(z, 0.0) + math.log1p(math.exp(-abs(z)))


def log_dist_plus(u: float) -> float:
    """log(1 - tanh u): log-distance from x = tanh u to the line x = 1."""
    # 1 - tanh u = 2 / (1 + e^{2u})
    return LN2 - _softplus(2.0 * u)


def log_dist_minus(u: float) -> float:
    """log(1 + tanh u): log-distance to the line x = -1."""
    return LN2 - _softplus(-2.0 * u)


def chart_transform(point, from_chart: str, to_chart: str) -> tuple:
    """Map a point between the plane chart and the strip chart ``x = tanh u``."""
    a, y = float(point[0]), float(point[1])
    if from_chart == to_chart:
        return (a, y)
    if (from_chart, to_chart) == (UY, XY):
        return (math.tanh(a), y)
    if (from_chart, to_chart) == (XY, UY):
        if not abs(a) < 1:
            raise OutOfChart(f"x={a} is outside the strip |x| < 1")
        return (math.atanh(a), y)
    raise ValueError(f"unknown chart pair {from_chart!r} -> {to_chart!r}")


# ---------------------------------------------------------------------------
# fields


@dataclass(frozen=True)
class TranscriticalField:
    eps: float

    def __call__(self, t, q):
        x, y = q[0], q[1]
        return (-y * x + x * x, -self.eps)


@dataclass(frozen=True)
class EnhancedFieldXY:
    eps: float

    def __call__(self, t, q):
        x, y = q[0], q[1]
        return ((1.0 - x * x) * (x - y), self.eps * x)


@dataclass(frozen=True)
class EnhancedFieldUY:
    eps: float

    def __call__(self, t, q):
        x = tanh_sat(q[0])
        return (x - q[1], self.eps * x)


def vdp_f(x):
    return x ** 3 / 3.0 + x * x


def vdp_fprime(x):
    return x * x + 2.0 * x


@dataclass(frozen=True)
class VanDerPolField:
    eps: float
    c: float

    def __call__(self, t, q):
        x, y = q[0], q[1]
        return ((y - x * x * x / 3.0 - x * x) / self.eps, self.c - x)


# ---------------------------------------------------------------------------
# event functions


@dataclass(frozen=True)
class _Coordinate:
    index: int
    offset: float = 0.0

    def __call__(self, t, q):
        return q[self.index] - self.offset


@dataclass(frozen=True)
class _Diagonal:
    """y - x, in either chart."""

    strip: bool

    def __call__(self, t, q):
        x = tanh_sat(q[0]) if self.strip else q[0]
        return q[1] - x


@dataclass(frozen=True)
class _Band:
    """Positive inside the band of width delta around x = sign (sign = +-1)."""

    sign: int
    delta: float
    strip: bool

    def __call__(self, t, q):
        if self.strip:
            ld = log_dist_plus(q[0]) if self.sign > 0 else log_dist_minus(q[0])
            return math.log(self.delta) - ld
        return self.delta - abs(q[0] - self.sign)


@dataclass(frozen=True)
class _AbsBand:
    delta: float

    def __call__(self, t, q):
        return abs(q[0]) - self.delta


@dataclass(frozen=True)
class _VdpNullcline:
    """y - f(x); its sign is the sign of x' in the van der Pol system."""

    def __call__(self, t, q):
        return q[1] - vdp_f(q[0])


# ---------------------------------------------------------------------------
# model containers


@dataclass(frozen=True)
class ManifoldBranch:
    """An invariant line of the fast dynamics.

    ``transverse`` returns the derivative of the fast component across the
    branch at a point on it; its sign gives the stability.
    ``repulsive_region`` is a predicate on (x, y) selecting the part of the
    branch where that derivative is positive. The argument of ``transverse``
    is the coordinate running along the locus: y for the vertical lines,
    x for the diagonal and the cubic.
    """

    id: str
    locus: str
    transverse: Callable[[float], float]
    repulsive_region: Callable[[float, float], bool]
    sign: int = 0

    def stability(self, point) -> str:
        d = self.transverse(point)
        if d > 0:
            return REPELLING
        if d < 0:
            return ATTRACTING
        return NEUTRAL


@dataclass(frozen=True)
class SystemModel:
    name: str
    params: MappingProxyType
    chart: str
    field: Callable
    invariant_manifolds: tuple = ()
    standard_events: tuple = ()

    @property
    def eps(self) -> float:
        return self.params["eps"]

    def branch(self, branch_id: str) -> ManifoldBranch:
        for b in self.invariant_manifolds:
            if b.id == branch_id:
                return b
        raise KeyError(branch_id)

    def event(self, event_id: str) -> EventSpec:
        for ev in self.standard_events:
            if ev.id == event_id:
                return ev
        raise KeyError(event_id)


def _check_eps(eps):
    if not (isinstance(eps, (int, float)) and math.isfinite(eps) and eps > 0):
        raise InvalidParameter(f"eps must be finite and > 0, got {eps!r}")


@dataclass(frozen=True)
class _XPlusTransverse:
    # d/dx[(1 - x^2)(x - y)] at x = 1 is -2(1 - y)
    def __call__(self, y):
        return -2.0 * (1.0 - y)


@dataclass(frozen=True)
class _XMinusTransverse:
    # at x = -1 the derivative is 2(-1 - y) = -2(1 + y)
    def __call__(self, y):
        return -2.0 * (1.0 + y)


@dataclass(frozen=True)
class _DiagonalTransverse:
    # along y = x the derivative in x is (1 - x^2)
    def __call__(self, x):
        return 1.0 - x * x


@dataclass(frozen=True)
class _Above:
    level: float

    def __call__(self, x, y):
        return y > self.level


@dataclass(frozen=True)
class _Below:
    level: float

    def __call__(self, x, y):
        return y < self.level


@dataclass(frozen=True)
class _InsideStrip:
    def __call__(self, x, y):
        return abs(x) < 1


ENHANCED_BRANCHES = (
    ManifoldBranch("x=+1", "x = 1", _XPlusTransverse(), _Above(1.0), sign=1),
    ManifoldBranch("x=-1", "x = -1", _XMinusTransverse(), _Below(-1.0), sign=-1),
    ManifoldBranch("y=x", "y = x", _DiagonalTransverse(), _InsideStrip(), sign=0),
)


def make_transcritical_dynamical(eps: float, band: float = 1e-3) -> SystemModel:
    """Slowly swept transcritical bifurcation ``x' = -y x + x^2, y' = -eps``."""
    _check_eps(eps)
    events = (
        EventSpec("x_band", _AbsBand(band), ANY),
        EventSpec("y0", _Coordinate(1), ANY),
        EventSpec("diag", _Diagonal(strip=False), ANY),
    )
    return SystemModel(
        name="transcritical_dynamical",
        params=MappingProxyType({"eps": float(eps), "band": float(band)}),
        chart=XY,
        field=TranscriticalField(float(eps)),
        invariant_manifolds=(),
        standard_events=events,
    )


def make_enhanced_delay(eps: float, chart: str = UY, delta: float = 0.05) -> SystemModel:
    """Enhanced-delay system ``x' = (1 - x^2)(x - y), y' = eps x``.

    Standard events: ``x0`` (x = 0), ``diag`` (y = x), ``band+``/``band-``
    (distance delta from x = +-1, positive inside the band) and
    ``region+``/``region-`` (y - 1 and y + 1, bounding the repulsive parts).
    """
    _check_eps(eps)
    if chart not in (XY, UY):
        raise InvalidParameter(f"chart must be 'XY' or 'UY', got {chart!r}")
    if not delta > 0:
        raise InvalidParameter(f"delta must be > 0, got {delta!r}")
    strip = chart == UY
    events = (
        EventSpec("x0", _Coordinate(0), ANY),
        EventSpec("diag", _Diagonal(strip), ANY),
        EventSpec("band+", _Band(1, delta, strip), ANY),
        EventSpec("band-", _Band(-1, delta, strip), ANY),
        EventSpec("region+", _Coordinate(1, 1.0), ANY),
        EventSpec("region-", _Coordinate(1, -1.0), ANY),
    )
    fld = EnhancedFieldUY(float(eps)) if strip else EnhancedFieldXY(float(eps))
    return SystemModel(
        name="enhanced_delay",
        params=MappingProxyType({"eps": float(eps), "delta": float(delta)}),
        chart=chart,
        field=fld,
        invariant_manifolds=ENHANCED_BRANCHES,
        standard_events=events,
    )


@dataclass(frozen=True)
class _CubicTransverse:
    eps: float

    def __call__(self, x):
        return -vdp_fprime(x) / self.eps


@dataclass(frozen=True)
class _MiddleBranch:
    def __call__(self, x, y):
        return -2.0 < x < 0.0


VDP_FOLDS = (-2.0, 0.0)


def make_vdp_canard(eps: float, c: float) -> SystemModel:
    """Van der Pol system ``eps x' = y - x^3/3 - x^2, y' = c - x``.

    The critical manifold ``y = x^3/3 + x^2`` has folds at x = -2 and x = 0;
    its middle part is repelling.
    """
    _check_eps(eps)
    if not math.isfinite(c):
        raise InvalidParameter(f"c must be finite, got {c!r}")
    branch = ManifoldBranch(
        "critical", "y = x^3/3 + x^2", _CubicTransverse(float(eps)), _MiddleBranch()
    )
    events = (EventSpec("xdot0", _VdpNullcline(), ANY),)
    return SystemModel(
        name="vdp_canard",
        params=MappingProxyType({"eps": float(eps), "c": float(c)}),
        chart=XY,
        field=VanDerPolField(float(eps), float(c)),
        invariant_manifolds=(branch,),
        standard_events=events,
    )


# ---------------------------------------------------------------------------
# static transcritical bifurcation


@dataclass(frozen=True)
class EquilibriumReport:
    lam: float
    equilibria: tuple  # of (location, stability)


def _classify(eigenvalue):
    if eigenvalue < 0:
        return STABLE
    if eigenvalue > 0:
        return UNSTABLE
    return DEGENERATE


def static_equilibria(lam: float) -> EquilibriumReport:
    """Equilibria of ``x' = -lam x + x^2`` with linear stability.

    The linearization is ``-lam + 2x``: ``-lam`` at 0 and ``+lam`` at lam.
    """
    lam = float(lam)
    if not math.isfinite(lam):
        raise InvalidParameter(f"lambda must be finite, got {lam!r}")
    if lam == 0.0:
        return EquilibriumReport(lam, ((0.0, DEGENERATE),))
    return EquilibriumReport(lam, ((0.0, _classify(-lam)), (lam, _classify(lam))))
