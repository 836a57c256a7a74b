"""Adaptive Dormand-Prince 5(4) integration of planar ODEs with event location.

Fields are plain callables ``field(t, q) -> tuple`` over tuples of floats.
Two-dimensional states are the norm; a third component is used internally
to carry a running quadrature (see ``integrate(..., quadrature=...)``).
Everything here works on Python floats rather than numpy arrays because the
per-step overhead of tiny arrays dominates for 2-vectors.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .errors import NoBracket, NonFiniteField

__all__ = [
    "State",
    "ToleranceConfig",
    "EventSpec",
    "EventRecord",
    "Trajectory",
    "step",
    "integrate",
    "locate_event",
    "hermite",
]

# Dormand-Prince 5(4) tableau
_C2, _C3, _C4, _C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
_B1, _B3, _B4, _B5, _B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
# difference between 5th order weights and the embedded 4th order weights
_E1 = 71 / 57600
_E3 = -71 / 16695
_E4 = 71 / 1920
_E5 = -17253 / 339200
_E6 = 22 / 525
_E7 = -1 / 40

RISING, FALLING, ANY = "rising", "falling", "any"

Field = Callable[[float, tuple], tuple]


class State(NamedTuple):
    t: float
    q: tuple


@dataclass(frozen=True)
class ToleranceConfig:
    """Step control settings.

    ``event_time_tol`` is relative: the effective tolerance at time t is
    ``event_time_tol * max(1, |t|)``.
    """

    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    max_step: float = 10.0
    min_step: float = 1e-12
    event_time_tol: float = 1e-12
    max_steps: int = 50_000_000

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol", "max_step", "min_step", "event_time_tol"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ValueError(f"{name} must be finite and > 0, got {value!r}")
        if not self.min_step < self.max_step:
            raise ValueError("min_step must be smaller than max_step")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")

    def replace(self, **changes) -> "ToleranceConfig":
        values = {k: getattr(self, k) for k in self.__dataclass_fields__}
        values.update(changes)
        return ToleranceConfig(**values)


@dataclass(frozen=True)
class EventSpec:
    id: str
    g: Callable[[float, tuple], float]
    direction: str = ANY
    terminal: bool = False

    def __post_init__(self):
        if self.direction not in (RISING, FALLING, ANY):
            raise ValueError(f"unknown event direction {self.direction!r}")


class EventRecord(NamedTuple):
    event_id: str
    t_event: float
    state: State
    residual: float
    direction: str  # actual crossing direction, RISING or FALLING


@dataclass
class Trajectory:
    """Samples and refined events from one integration run.

    ``t`` has shape (n,), ``q`` shape (n, d) and ``dq`` holds the field value
    at every sample (used for cubic Hermite dense output); it may be None
    for hand-built trajectories, in which case interpolation is linear.
    """

    chart: str
    t: np.ndarray
    q: np.ndarray
    events: list = dc_field(default_factory=list)
    termination: str = "time_limit"
    dq: np.ndarray | None = None

    def __len__(self):
        return len(self.t)

    @property
    def final(self) -> State:
        return State(float(self.t[-1]), tuple(float(v) for v in self.q[-1]))

    def events_of(self, event_id: str) -> list:
        return [ev for ev in self.events if ev.event_id == event_id]

    def xy(self):
        """Return (x, y) arrays regardless of chart."""
        if self.chart == "UY":
            return np.tanh(self.q[:, 0]), self.q[:, 1]
        return self.q[:, 0], self.q[:, 1]

    def state_at(self, t: float) -> tuple:
        """Dense output at time ``t`` (cubic Hermite between samples)."""
        ts = self.t
        if not ts[0] <= t <= ts[-1]:
            raise ValueError(f"t={t} outside trajectory span [{ts[0]}, {ts[-1]}]")
        i = int(np.searchsorted(ts, t, side="right")) - 1
        i = min(max(i, 0), len(ts) - 2)
        if len(ts) == 1:
            return tuple(self.q[0])
        t0, t1 = ts[i], ts[i + 1]
        if self.dq is None:
            s = (t - t0) / (t1 - t0)
            return tuple((1 - s) * self.q[i] + s * self.q[i + 1])
        return hermite(t, t0, t1, self.q[i], self.q[i + 1], self.dq[i], self.dq[i + 1])

    def concat(self, other: "Trajectory") -> "Trajectory":
        """Append a continuation run that starts at this run's final state."""
        if other.chart != self.chart:
            raise ValueError("cannot join trajectories in different charts")
        if other.t[0] != self.t[-1]:
            raise ValueError("continuation must start at the final sample")
        dq = None
        if self.dq is not None and other.dq is not None:
            dq = np.concatenate([self.dq, other.dq[1:]])
        return Trajectory(
            chart=self.chart,
            t=np.concatenate([self.t, other.t[1:]]),
            q=np.concatenate([self.q, other.q[1:]]),
            events=self.events + other.events,
            termination=other.termination,
            dq=dq,
        )


def hermite(t, t0, t1, q0, q1, f0, f1):
    h = t1 - t0
    s = (t - t0) / h
    h00 = (1 + 2 * s) * (1 - s) ** 2
    h10 = s * (1 - s) ** 2
    h01 = s * s * (3 - 2 * s)
    h11 = s * s * (s - 1)
    return tuple(
        h00 * a + h10 * h * da + h01 * b + h11 * h * db
        for a, b, da, db in zip(q0, q1, f0, f1)
    )


def _eval(field: Field, t: float, q: tuple) -> tuple:
    k = field(t, q)
    # one isfinite call: inf - inf and nan both propagate to the sum
    if not math.isfinite(math.fsum(k) if len(k) > 3 else sum(k)):
        raise NonFiniteField(t, q, k)
    return k


def _dp_step(field, t, q, h, k1):
    """One Dormand-Prince step. Returns (q_new, k7, err_vec)."""
    if len(q) == 2:
        return _dp_step2(field, t, q, h, k1)
    k2 = _eval(field, t + _C2 * h, tuple(a + h * _A21 * b for a, b in zip(q, k1)))
    k3 = _eval(field, t + _C3 * h, tuple(
        a + h * (_A31 * b1 + _A32 * b2) for a, b1, b2 in zip(q, k1, k2)))
    k4 = _eval(field, t + _C4 * h, tuple(
        a + h * (_A41 * b1 + _A42 * b2 + _A43 * b3) for a, b1, b2, b3 in zip(q, k1, k2, k3)))
    k5 = _eval(field, t + _C5 * h, tuple(
        a + h * (_A51 * b1 + _A52 * b2 + _A53 * b3 + _A54 * b4)
        for a, b1, b2, b3, b4 in zip(q, k1, k2, k3, k4)))
    k6 = _eval(field, t + h, tuple(
        a + h * (_A61 * b1 + _A62 * b2 + _A63 * b3 + _A64 * b4 + _A65 * b5)
        for a, b1, b2, b3, b4, b5 in zip(q, k1, k2, k3, k4, k5)))
    q_new = tuple(
        a + h * (_B1 * b1 + _B3 * b3 + _B4 * b4 + _B5 * b5 + _B6 * b6)
        for a, b1, b3, b4, b5, b6 in zip(q, k1, k3, k4, k5, k6))
    k7 = _eval(field, t + h, q_new)
    err = tuple(
        h * (_E1 * b1 + _E3 * b3 + _E4 * b4 + _E5 * b5 + _E6 * b6 + _E7 * b7)
        for b1, b3, b4, b5, b6, b7 in zip(k1, k3, k4, k5, k6, k7))
    return q_new, k7, err


def _dp_step2(field, t, q, h, k1):
    # same arithmetic as the generic path, unrolled for planar states
    x, y = q
    a1, b1 = k1
    a2, b2 = _eval(field, t + _C2 * h, (x + h * (_A21 * a1), y + h * (_A21 * b1)))
    a3, b3 = _eval(field, t + _C3 * h, (
        x + h * (_A31 * a1 + _A32 * a2), y + h * (_A31 * b1 + _A32 * b2)))
    a4, b4 = _eval(field, t + _C4 * h, (
        x + h * (_A41 * a1 + _A42 * a2 + _A43 * a3),
        y + h * (_A41 * b1 + _A42 * b2 + _A43 * b3)))
    a5, b5 = _eval(field, t + _C5 * h, (
        x + h * (_A51 * a1 + _A52 * a2 + _A53 * a3 + _A54 * a4),
        y + h * (_A51 * b1 + _A52 * b2 + _A53 * b3 + _A54 * b4)))
    a6, b6 = _eval(field, t + h, (
        x + h * (_A61 * a1 + _A62 * a2 + _A63 * a3 + _A64 * a4 + _A65 * a5),
        y + h * (_A61 * b1 + _A62 * b2 + _A63 * b3 + _A64 * b4 + _A65 * b5)))
    q_new = (
        x + h * (_B1 * a1 + _B3 * a3 + _B4 * a4 + _B5 * a5 + _B6 * a6),
        y + h * (_B1 * b1 + _B3 * b3 + _B4 * b4 + _B5 * b5 + _B6 * b6),
    )
    k7 = _eval(field, t + h, q_new)
    a7, b7 = k7
    err = (
        h * (_E1 * a1 + _E3 * a3 + _E4 * a4 + _E5 * a5 + _E6 * a6 + _E7 * a7),
        h * (_E1 * b1 + _E3 * b3 + _E4 * b4 + _E5 * b5 + _E6 * b6 + _E7 * b7),
    )
    return q_new, k7, err


def _error_norm(err, q_old, q_new, tol: ToleranceConfig) -> float:
    worst = 0.0
    for e, a, b in zip(err, q_old, q_new):
        sc = tol.abs_tol + tol.rel_tol * max(abs(a), abs(b))
        r = abs(e) / sc
        if r > worst:
            worst = r
    return worst


def step(field: Field, state: State, h: float, tol: ToleranceConfig | None = None):
    """Take a single embedded Runge-Kutta step of size ``h``.

    Returns ``(State, error_estimate)`` where the error estimate is the
    scaled max-norm used for step acceptance (accept iff <= 1).
    """
    if not h > 0:
        raise ValueError("step size must be positive")
    tol = tol or ToleranceConfig()
    t, q = state.t, tuple(float(v) for v in state.q)
    k1 = _eval(field, t, q)
    q_new, _, err = _dp_step(field, t, q, h, k1)
    return State(t + h, q_new), _error_norm(err, q, q_new, tol)


def _initial_step(field, t, q, k1, tol: ToleranceConfig, t_end):
    # Hairer, Norsett & Wanner, Solving ODEs I, II.4
    sc = [tol.abs_tol + tol.rel_tol * abs(a) for a in q]
    d0 = max(abs(a) / s for a, s in zip(q, sc))
    d1 = max(abs(a) / s for a, s in zip(k1, sc))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, tol.max_step, t_end - t)
    q1 = tuple(a + h0 * b for a, b in zip(q, k1))
    k2 = _eval(field, t + h0, q1)
    d2 = max(abs(b - a) / s for a, b, s in zip(k1, k2, sc)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1, tol.max_step, t_end - t)


def _sign(v: float) -> int:
    return (v > 0) - (v < 0)


def locate_event(
    field: Field,
    bracket: tuple,
    g: Callable[[float, tuple], float],
    tol: float,
    event_id: str = "event",
    max_iter: int = 80,
) -> EventRecord:
    """Refine a sign change of ``g`` between two states on one trajectory.

    Intermediate states are produced by re-integrating a single step from
    the left end of the bracket, so the right end must be reachable by one
    accurate step (true for brackets coming from an accepted step).
    Uses the Illinois variant of regula falsi, falling back to bisection
    whenever an iterate would not shrink the bracket enough.
    """
    left, right = bracket
    ta, tb = left.t, right.t
    qa, qb = tuple(left.q), tuple(right.q)
    ga, gb = g(ta, qa), g(tb, qb)
    if ga * gb > 0 or not (math.isfinite(ga) and math.isfinite(gb)):
        raise NoBracket(event_id, ta, tb, ga, gb)
    direction = RISING if ga < gb else FALLING
    if ga == 0:
        return EventRecord(event_id, ta, State(ta, qa), 0.0, direction)
    if gb == 0:
        return EventRecord(event_id, tb, State(tb, qb), 0.0, direction)

    t0, q0 = ta, qa
    k1 = _eval(field, t0, q0)

    def state_at(t):
        if t == t0:
            return q0
        return _dp_step(field, t0, q0, t - t0, k1)[0]

    side = 0
    extra = 0
    for _ in range(max_iter):
        if tb - ta <= tol:
            # a few more regula falsi iterates cost little and drive the
            # residual to rounding level
            extra += 1
            if extra > 3:
                break
        width = tb - ta
        tc = tb - gb * (tb - ta) / (gb - ga)
        if not (ta < tc < tb) or min(tc - ta, tb - tc) < 1e-3 * width and side == 0:
            tc = 0.5 * (ta + tb)
        if tc <= ta or tc >= tb:
            break  # bracket at float resolution
        qc = state_at(tc)
        gc = g(tc, qc)
        if gc == 0:
            return EventRecord(event_id, tc, State(tc, qc), 0.0, direction)
        if _sign(gc) == _sign(ga):
            ta, qa, ga = tc, qc, gc
            if side == -1:
                gb *= 0.5
            side = -1
        else:
            tb, qb, gb = tc, qc, gc
            if side == 1:
                ga *= 0.5
            side = 1
    # residuals must use the true g, not the Illinois-scaled values
    ra, rb = abs(g(ta, qa)), abs(g(tb, qb))
    if ra <= rb:
        return EventRecord(event_id, ta, State(ta, qa), ra, direction)
    return EventRecord(event_id, tb, State(tb, qb), rb, direction)


def integrate(
    field: Field,
    q0: State,
    t_end: float,
    tol: ToleranceConfig | None = None,
    events: Sequence[EventSpec] = (),
    chart: str = "XY",
    quadrature: Callable[[float, tuple], float] | None = None,
    h0: float | None = None,
) -> Trajectory:
    """Integrate ``field`` from ``q0`` up to ``t_end``.

    If ``quadrature`` is given, the integral of ``quadrature(t, q)`` is
    carried as an extra state component under the same error control; it
    appears as the last column of ``Trajectory.q``. It starts at 0 unless
    ``q0`` already has three components (continuing an earlier run).

    Every accepted step is stored as a sample. Refined event states are
    inserted as samples as well, so the trajectory passes exactly through
    each event.
    """
    tol = tol or ToleranceConfig()
    t = float(q0.t)
    if not t_end > t:
        raise ValueError(f"t_end={t_end} must exceed the start time {t}")
    q = tuple(float(v) for v in q0.q)
    for v in q:
        if not math.isfinite(v):
            raise ValueError(f"non-finite initial state {q}")
    ids = [ev.id for ev in events]
    if len(set(ids)) != len(ids):
        raise ValueError(f"duplicate event ids in {ids}")

    if quadrature is not None:
        base = field

        def field(t, q, _base=base, _quad=quadrature):  # noqa: F811
            qq = (q[0], q[1])
            dx, dy = _base(t, qq)
            return (dx, dy, _quad(t, qq))

        if len(q) == 2:
            q = q + (0.0,)

    k1 = _eval(field, t, q)
    ts, qs, dqs = [t], [q], [k1]
    records: list = []
    g_prev = [ev.g(t, q) for ev in events]

    h = h0 if h0 is not None else _initial_step(field, t, q, k1, tol, t_end)
    err_prev = 1e-4
    n_steps = 0
    termination = "time_limit"
    while t < t_end:
        if n_steps >= tol.max_steps:
            termination = "step_budget"
            break
        h = min(h, tol.max_step)
        last = False
        if t + h >= t_end:
            h = t_end - t
            last = True
        if h < tol.min_step and not last:
            termination = "step_floor"
            break
        q_new, k7, err_vec = _dp_step(field, t, q, h, k1)
        n_steps += 1
        err = _error_norm(err_vec, q, q_new, tol)
        if err > 1.0:
            h *= max(0.2, 0.9 * err ** -0.2)
            if t + h == t:
                termination = "step_floor"
                break
            continue

        t_new = t_end if last else t + h
        # event detection over [t, t_new]
        found = []
        g_new = []
        for i, ev in enumerate(events):
            gn = ev.g(t_new, q_new)
            g_new.append(gn)
            gp = g_prev[i]
            if gp == 0 or _sign(gp) == _sign(gn):
                continue
            rising = gn > gp
            if ev.direction == RISING and not rising or ev.direction == FALLING and rising:
                continue
            etol = tol.event_time_tol * max(1.0, abs(t_new))
            rec = locate_event(
                field, (State(t, q), State(t_new, q_new)), ev.g, etol, event_id=ev.id
            )
            found.append((rec.t_event, i, rec))
        found.sort(key=lambda item: (item[0], item[1]))
        terminal_at = None
        for t_ev, i, rec in found:
            if terminal_at is not None and t_ev > terminal_at:
                break
            records.append(rec)
            if t < t_ev < t_new and t_ev > ts[-1]:
                ts.append(t_ev)
                qs.append(rec.state.q)
                dqs.append(_eval(field, t_ev, rec.state.q))
            if events[i].terminal and terminal_at is None:
                terminal_at = t_ev
        if terminal_at is not None:
            if terminal_at >= t_new:
                ts.append(t_new)
                qs.append(q_new)
                dqs.append(k7)
            termination = "terminal_event"
            break

        t, q, k1 = t_new, q_new, k7
        g_prev = g_new
        ts.append(t)
        qs.append(q)
        dqs.append(k1)

        # PI step-size control
        fac = 0.9 * err ** -0.14 * err_prev ** 0.08 if err > 0 else 5.0
        h *= min(5.0, max(0.2, fac))
        err_prev = max(err, 1e-4)

    return Trajectory(
        chart=chart,
        t=np.asarray(ts, dtype=float),
        q=np.asarray(qs, dtype=float),
        events=records,
        termination=termination,
        dq=np.asarray(dqs, dtype=float),
    )
