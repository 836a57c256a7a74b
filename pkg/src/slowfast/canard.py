"""Canard explosion in the van der Pol system ``eps x' = y - x^3/3 - x^2``,
``y' = c - x``.

For c slightly below the Hopf value c = 0 the attractor is a small cycle
around the fold at x = 0; a little further the amplitude explodes to the
relaxation cycle (x between -3 and 1) through canard cycles that follow the
repelling middle branch. The explosion happens within an exponentially thin
range of c, which is what ``window_scaling`` measures.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import IncompleteSummary, InsufficientData, NoTransitionInRange
from .models import make_vdp_canard, vdp_f
from .ode import FALLING, RISING, EventSpec, State, ToleranceConfig, integrate

EQUILIBRIUM, SMALL_CYCLE, CANARD_LIKE, RELAXATION = (
    "equilibrium", "small_cycle", "canard_like", "relaxation",
)
EQUILIBRIUM_AMPLITUDE = 1e-4
RELAXATION_FRACTION = 0.6
SMALL_FRACTION = 0.2
REFERENCE_C = -1.0

DEFAULT_TOL = ToleranceConfig(rel_tol=1e-10, abs_tol=1e-12, max_step=1.0, max_steps=2_000_000)


@dataclass(frozen=True)
class AttractorSummary:
    eps: float
    c: float
    amplitude: float
    period_estimate: float | None
    cls: str
    n_extrema: int


def classify(amplitude: float, a_ref: float) -> str:
    if amplitude < EQUILIBRIUM_AMPLITUDE:
        return EQUILIBRIUM
    if amplitude < SMALL_FRACTION * a_ref:
        return SMALL_CYCLE
    if amplitude >= RELAXATION_FRACTION * a_ref:
        return RELAXATION
    return CANARD_LIKE


def measure_amplitude(eps, c, transient=None, window=None, tol=None):
    """Post-transient amplitude of x from event-located extrema.

    Returns (amplitude, period or None, number of extrema in the window).
    """
    transient = 20.0 / eps if transient is None else transient
    window = 40.0 / eps if window is None else window
    tol = tol or DEFAULT_TOL
    model = make_vdp_canard(eps, c)
    nullcline = model.event("xdot0").g
    # x' changes sign on y = f(x): maxima of x are falling crossings
    events = [
        _spec("max", nullcline, FALLING),
        _spec("min", nullcline, RISING),
    ]
    start = State(0.0, (c + 0.01, vdp_f(c)))
    traj = integrate(model.field, start, transient + window, tol, events)
    if traj.termination != "time_limit":
        raise IncompleteSummary(
            f"run stopped early ({traj.termination}) at t={traj.t[-1]:g}",
            partial=traj,
        )
    late = [ev for ev in traj.events if ev.t_event >= transient]
    maxima = [ev for ev in late if ev.event_id == "max"]
    minima = [ev for ev in late if ev.event_id == "min"]
    if maxima and minima:
        hi = max(ev.state.q[0] for ev in maxima)
        lo = min(ev.state.q[0] for ev in minima)
        amplitude = hi - lo
    else:
        # monotone approach to the equilibrium: no extrema left to compare
        sel = traj.t >= transient
        xs = traj.q[sel, 0]
        amplitude = float(xs.max() - xs.min()) if len(xs) else 0.0
    period = None
    if len(maxima) >= 2:
        period = (maxima[-1].t_event - maxima[0].t_event) / (len(maxima) - 1)
    return max(amplitude, 0.0), period, len(late)


def _spec(event_id, g, direction):
    return EventSpec(event_id, g, direction)


@lru_cache(maxsize=64)
def reference_amplitude(eps: float) -> float:
    """Amplitude of the deep relaxation cycle at c = -1."""
    return measure_amplitude(eps, REFERENCE_C)[0]


def attractor_summary(eps, c, transient=None, window=None, tol=None, a_ref=None):
    amplitude, period, n_ext = measure_amplitude(eps, c, transient, window, tol)
    a_ref = reference_amplitude(eps) if a_ref is None else a_ref
    return AttractorSummary(eps, c, amplitude, period, classify(amplitude, a_ref), n_ext)


@dataclass
class CanardScan:
    eps: float
    bracket: tuple
    threshold: float
    amplitudes: dict = field(default_factory=dict)
    at_resolution_floor: bool = False

    @property
    def width(self) -> float:
        return self.bracket[1] - self.bracket[0]


def canard_bisect(eps, c_range, threshold=None, tol_c=1e-12, tol=None, transient=None, window=None):
    """Bisect on c for the point where the post-transient amplitude crosses
    ``threshold`` (default: half the relaxation amplitude).

    Both ends of the returned bracket classify differently (amplitude above
    vs below the threshold). Stops when the bracket is narrower than
    ``tol_c`` or cannot be split further in double precision.
    """
    lo, hi = float(c_range[0]), float(c_range[1])
    if not lo < hi:
        raise ValueError("c_range must be increasing")
    if threshold is None:
        threshold = 0.5 * reference_amplitude(eps)

    amps = {}

    def amp(c):
        if c not in amps:
            amps[c] = measure_amplitude(eps, c, transient, window, tol)[0]
        return amps[c]

    big_lo = amp(lo) >= threshold
    big_hi = amp(hi) >= threshold
    if big_lo == big_hi:
        raise NoTransitionInRange(
            f"amplitude is {'above' if big_lo else 'below'} {threshold:g} at both "
            f"c={lo!r} and c={hi!r}"
        )
    floor = False
    while hi - lo > tol_c:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            floor = True
            break
        if (amp(mid) >= threshold) == big_lo:
            lo = mid
        else:
            hi = mid
    return CanardScan(eps, (lo, hi), threshold, amps, floor)


@dataclass
class WindowFit:
    eps: np.ndarray
    widths: np.ndarray
    c_low: np.ndarray  # c where the amplitude crosses the low threshold
    c_high: np.ndarray
    slope: float  # d log(width) / d(1/eps)
    intercept: float
    r_squared: float
    excluded: list  # eps values dropped because the width hit the resolution floor


def _window_width(args):
    eps, c_range, low, high, tol_c, tol, transient, window = args
    a_ref = reference_amplitude(eps)
    s_low = canard_bisect(eps, c_range, low * a_ref, tol_c, tol, transient, window)
    s_high = canard_bisect(eps, c_range, high * a_ref, tol_c, tol, transient, window)
    c_low = 0.5 * sum(s_low.bracket)
    c_high = 0.5 * sum(s_high.bracket)
    resolution = max(s_low.width, s_high.width)
    floor = s_low.at_resolution_floor or s_high.at_resolution_floor
    return eps, c_low, c_high, resolution, floor


def _at(value, eps):
    return value(eps) if callable(value) else value


def window_scaling(
    eps_list,
    amplitude_thresholds=(0.25, 0.75),
    c_range=(-0.2, 0.05),
    tol_c=1e-8,
    workers: int = 1,
    tol=None,
    transient=None,
    window=None,
) -> WindowFit:
    """Width of the explosion window against eps, with a fit of
    ``log(width)`` against ``1/eps``.

    Thresholds are fractions of the relaxation amplitude at each eps. Widths
    not clearly above the bisection resolution are excluded and listed.
    ``transient`` and ``window`` may be callables of eps (e.g.
    ``lambda e: 5 / e``) or fixed numbers; None uses the summary defaults.
    """
    eps_list = [float(e) for e in eps_list]
    if len(eps_list) < 3:
        raise InsufficientData(f"need >= 3 values of eps, got {len(eps_list)}")
    low, high = amplitude_thresholds
    jobs = [
        (e, c_range, low, high, tol_c, tol, _at(transient, e), _at(window, e))
        for e in eps_list
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_window_width, jobs))
    else:
        rows = [_window_width(j) for j in jobs]
    kept, excluded = [], []
    for eps, c_low, c_high, resolution, floor in rows:
        width = abs(c_high - c_low)
        if floor or width <= 10 * resolution:
            excluded.append(eps)
        else:
            kept.append((eps, width, c_low, c_high))
    if len(kept) < 2:
        raise InsufficientData(f"only {len(kept)} measurable widths; excluded eps={excluded}")
    e = np.array([k[0] for k in kept])
    wdt = np.array([k[1] for k in kept])
    xs, ys = 1.0 / e, np.log(wdt)
    slope, intercept = np.polyfit(xs, ys, 1)
    pred = slope * xs + intercept
    ss_res = float(np.sum((ys - pred) ** 2))
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return WindowFit(
        e, wdt, np.array([k[2] for k in kept]), np.array([k[3] for k in kept]),
        float(slope), float(intercept), r2, excluded,
    )
