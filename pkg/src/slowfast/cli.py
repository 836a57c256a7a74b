"""Batch front end: ``slowfast <experiment> --config FILE --out-dir DIR``.

Each run writes CSV time series and JSON reports atomically, then a
``manifest.json`` listing every output with its SHA-256 digest.

Exit codes: 0 success, 2 config error, 3 numerical or oracle failure,
4 budget exhausted, 5 I/O error.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from . import __version__
from .analysis.asymptote import asymptote_check
from .analysis.bernoulli import verify_transcritical_delay
from .analysis.crossings import crossing_sequences, simulate_strip
from .analysis.delay import verify_enhanced_delay
from .canard import window_scaling
from .config import EXPERIMENTS, ExperimentConfig, parse_config
from .errors import (
    ConfigError,
    IncompleteSummary,
    InsufficientData,
    NotFoundWithinBudget,
    SlowFastError,
)
from .models import (
    UY,
    XY,
    chart_transform,
    make_enhanced_delay,
    make_transcritical_dynamical,
    make_vdp_canard,
)
from .ode import State, ToleranceConfig, integrate

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_BUDGET, EXIT_IO = 0, 2, 3, 4, 5


class BudgetExhausted(Exception):
    """Outputs were written but the run hit its budget."""


# ---------------------------------------------------------------------------
# atomic output


def atomic_write(path: Path, write) -> None:
    """Write through a temp file in the target directory, then rename.

    ``write`` receives the open text handle. On any exception the temp file
    is removed and nothing appears under ``path``.
    """
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".part", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            write(fh)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def fmt(v) -> str:
    """Shortest round-trip decimal; empty for missing values."""
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return "nan"
    return repr(v)


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    return obj


class Outputs:
    def __init__(self, out_dir: Path, prefix: str):
        self.dir = Path(out_dir)
        self.prefix = prefix
        self.files: list[Path] = []

    def csv(self, name, header, rows):
        path = self.dir / f"{self.prefix}{name}.csv"

        def write(fh):
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(fmt(v) for v in row) + "\n")

        atomic_write(path, write)
        self.files.append(path)

    def json(self, name, payload):
        path = self.dir / f"{self.prefix}{name}.json"
        text = json.dumps(_plain(payload), indent=2, sort_keys=True) + "\n"
        atomic_write(path, lambda fh: fh.write(text))
        self.files.append(path)


def thin_indices(t: np.ndarray, keep_times, max_points: int) -> np.ndarray:
    """Every k-th sample so at most ~max_points remain, always keeping the
    first, the last and any sample at an event time."""
    n = len(t)
    if max_points <= 0 or n <= max_points:
        return np.arange(n)
    stride = math.ceil(n / max_points)
    keep = np.zeros(n, dtype=bool)
    keep[::stride] = True
    keep[[0, -1]] = True
    kt = np.asarray(keep_times, dtype=float)
    idx = np.searchsorted(t, kt)
    ok = idx < n
    idx = idx[ok]
    keep[idx[t[idx] == kt[ok]]] = True
    return np.nonzero(keep)[0]


# ---------------------------------------------------------------------------
# experiments


def _budget(cfg):
    return cfg["max_time"] or None


def run_simulate(cfg: ExperimentConfig, out: Outputs):
    eps, x0, y0 = cfg["epsilon"], cfg["x0"], cfg["y0"]
    tol = cfg.tolerances()
    kind = cfg["model"]
    chart = XY
    if kind == "enhanced":
        chart = cfg["chart"]
        model = make_enhanced_delay(eps, chart, cfg["delta"])
    elif kind == "transcritical":
        model = make_transcritical_dynamical(eps)
    else:
        model = make_vdp_canard(eps, cfg["c"])
    start = chart_transform((x0, y0), XY, chart)
    traj = integrate(model.field, State(0.0, start), cfg["t_end"], tol,
                     model.standard_events, chart=chart)
    names = ["t", "u", "y", "x"] if chart == UY else ["t", "x", "y"]
    idx = thin_indices(traj.t, [ev.t_event for ev in traj.events], cfg["output.max_points"])
    rows = []
    for i in idx:
        row = [traj.t[i], traj.q[i, 0], traj.q[i, 1]]
        if chart == UY:
            row.append(math.tanh(traj.q[i, 0]))
        rows.append(row)
    out.csv("trajectory", names, rows)
    out.csv(
        "events",
        ["event_id", "t_event", "q0", "q1", "residual", "direction"],
        [[ev.event_id, ev.t_event, ev.state.q[0], ev.state.q[1], ev.residual, ev.direction]
         for ev in traj.events],
    )
    out.json("report", {
        "model": model.name, "chart": chart, "params": dict(model.params),
        "termination": traj.termination, "samples": len(traj), "events": len(traj.events),
        "final": list(traj.final.q), "t_final": traj.final.t,
    })
    if traj.termination in ("step_budget", "step_floor"):
        raise BudgetExhausted(traj.termination)


def run_bernoulli(cfg, out):
    eps_list = cfg["epsilon_list"] or (cfg["epsilon"],)
    x0_list = cfg["x0_list"] or (cfg["x0"],)
    y0 = cfg["y0"]
    # the oracle run needs relative-only control; keep its own default
    # unless tolerances were set explicitly
    tol = cfg.tolerances()
    tol = None if tol == ToleranceConfig() else tol
    rows, summary = [], []
    for eps in eps_list:
        for x0 in x0_list:
            rep = verify_transcritical_delay(x0, y0, eps, tol=1e-6, tolerances=tol)
            for t, xn, xc, r in zip(rep.t, rep.x_numeric, rep.x_closed, rep.rel_err):
                rows.append([eps, x0, t, xn, xc, r])
            summary.append({
                "epsilon": eps, "x0": x0, "y0": y0, "max_rel_err": rep.max_rel_err,
                "max_x": rep.max_x, "x_at_turn": rep.x_at_turn, "t_exit": rep.t_exit,
                "delay_holds": rep.delay_holds, "termination": rep.termination,
            })
    out.csv("bernoulli", ["epsilon", "x0", "t", "x_numeric", "x_closed_form", "rel_err"], rows)
    out.json("summary", {
        "runs": summary, "max_rel_err": max(s["max_rel_err"] for s in summary),
    })
    short = [s for s in summary if s["termination"] != "time_limit"]
    if short:
        raise BudgetExhausted(f"{len(short)} run(s) stopped before t = 2 y0/eps")


def run_delay(cfg, out):
    try:
        wit = verify_enhanced_delay(
            cfg["x0"], cfg["y0"], cfg["epsilon"], cfg["delta"], cfg["T"],
            max_time=_budget(cfg), tol=cfg.tolerances(),
        )
        passes, found = wit.passes, True
        payload = {"found": True, "pass_index": wit.pass_index,
                   "witness": wit.witness._asdict(), "crossings": wit.crossings,
                   "a_n": wit.a_n}
    except NotFoundWithinBudget as exc:
        passes, found = exc.passes, False
        payload = {"found": False, "crossings": exc.crossings, "a_n": exc.a_n,
                   "message": str(exc)}
    payload.update({"delta": cfg["delta"], "T": cfg["T"], "epsilon": cfg["epsilon"]})
    out.csv(
        "passes",
        ["index", "branch", "enter_t", "exit_t", "duration", "y_enter", "y_exit", "complete"],
        [[i, p.branch, p.enter_t, p.exit_t, p.duration, p.y_enter, p.y_exit, p.complete]
         for i, p in enumerate(passes)],
    )
    out.json("report", payload)
    if not found:
        raise BudgetExhausted("no witness within budget")


def run_crossings(cfg, out):
    eps = cfg["epsilon"]
    traj = simulate_strip(
        cfg["x0"], cfg["y0"], eps, n_crossings=cfg["n_crossings"] + 1,
        tol=cfg.tolerances(), delta=cfg["delta"], max_time=_budget(cfg),
    )
    rep = crossing_sequences(traj, eps)
    rows = []
    for k in range(len(rep)):
        inner = k < len(rep) - 1
        rows.append([
            int(rep.n[k]), rep.t_n[k], rep.a_n[k],
            rep.theta_n[k] if inner else None,
            rep.xi_n[k] if inner else None,
            rep.log_one_minus_xi2[k] if inner else None,
            rep.res_w_tn[k],
            rep.res_w_theta[k] if inner else None,
            rep.res_telescoping[k] if inner else None,
            bool(rep.ineq_square[k]) if inner else None,
            bool(rep.ineq_sum[k]) if inner else None,
        ])
    out.csv("crossings", [
        "n", "t_n", "a_n", "theta_n", "xi_n", "log_one_minus_xi2", "res_w_tn", "res_w_theta",
        "res_telescoping", "ineq_square", "ineq_sum",
    ], rows)
    out.json("report", {
        "epsilon": eps, "crossings": len(rep), "interleaved": rep.interleaved,
        "signs_alternate": rep.signs_alternate() if len(rep) else True,
        "max_res_w_tn": float(rep.res_w_tn.max()) if len(rep) else None,
        "max_res_telescoping": float(rep.res_telescoping.max()) if len(rep) > 1 else None,
        "termination": traj.termination,
    })
    if len(rep) < cfg["n_crossings"]:
        raise BudgetExhausted(f"only {len(rep)} crossings within budget")


def run_asymptote(cfg, out):
    rep = asymptote_check(cfg["x0"], cfg["epsilon"], cfg["horizon"], cfg.tolerances())
    idx = thin_indices(rep.t, [], cfg["output.max_points"])
    out.csv("gap", ["t", "gap"], [[rep.t[i], rep.gap[i]] for i in idx])
    out.json("report", {
        "x0": rep.x0, "epsilon": rep.eps, "alpha0": rep.alpha0,
        "half_bound": rep.half_bound, "full_bound": rep.full_bound,
        "sup_gap": rep.sup_gap, "min_gap": rep.min_gap, "gap_at_end": rep.gap_at_end,
        "above_line": rep.above_line, "within_half_bound": rep.within_half_bound,
        "t_end": rep.t_end, "horizon": rep.horizon, "reached_horizon": rep.reached_horizon,
        "termination": rep.termination,
    })
    if not rep.reached_horizon:
        raise BudgetExhausted(f"stopped at t={rep.t_end:g} ({rep.termination})")


def run_canard(cfg, out):
    tol = cfg.tolerances()
    fit = window_scaling(
        cfg["epsilon_list"], tuple(cfg["thresholds"]), tuple(cfg["c_range"]),
        cfg["tol_c"], workers=cfg["workers"],
        tol=None if tol == ToleranceConfig() else tol,
        transient=lambda e: cfg["transient"] / e, window=lambda e: cfg["window"] / e,
    )
    out.csv("window", ["epsilon", "c_low", "c_high", "width"],
            [[e, a, b, w] for e, a, b, w in zip(fit.eps, fit.c_low, fit.c_high, fit.widths)])
    out.json("fit", {"slope": fit.slope, "intercept": fit.intercept,
                     "r_squared": fit.r_squared, "excluded": fit.excluded})


RUNNERS = {
    "simulate": run_simulate,
    "bernoulli-check": run_bernoulli,
    "delay-report": run_delay,
    "crossings": run_crossings,
    "asymptote-check": run_asymptote,
    "canard-scan": run_canard,
}


def run(config: ExperimentConfig, out_dir) -> dict:
    """Dispatch one experiment; returns the manifest (also written to disk)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    prefix = config["output.prefix"]
    out = Outputs(out_dir, f"{prefix}_" if prefix else "")
    start = time.perf_counter()
    status, code, message = "ok", EXIT_OK, ""
    try:
        RUNNERS[config.experiment](config, out)
    except BudgetExhausted as exc:
        status, code, message = "budget_exhausted", EXIT_BUDGET, str(exc)
    except (NotFoundWithinBudget, IncompleteSummary) as exc:
        status, code, message = "budget_exhausted", EXIT_BUDGET, str(exc)
    except (SlowFastError, ArithmeticError) as exc:
        status, code, message = "numerical_failure", EXIT_NUMERIC, f"{type(exc).__name__}: {exc}"
    manifest = {
        "tool_version": __version__,
        "config": config.as_dict(),
        "wall_time_s": time.perf_counter() - start,
        "status": status,
        "exit_code": code,
        "message": message,
        "outputs": [
            {"path": p.name, "sha256": hashlib.sha256(p.read_bytes()).hexdigest(),
             "bytes": p.stat().st_size}
            for p in out.files
        ],
    }
    text = json.dumps(_plain(manifest), indent=2, sort_keys=True) + "\n"
    atomic_write(out_dir / f"{out.prefix}manifest.json", lambda fh: fh.write(text))
    return manifest


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="slowfast", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="flat key = value config file")
        p.add_argument("--out-dir", type=Path, default=Path("."))
        p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = args.config.read_text() if args.config else ""
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        config = parse_config(text, [f"experiment={args.experiment}", *args.override]
                              if "experiment" not in text else args.override)
        if config.experiment != args.experiment:
            raise ConfigError(
                f"config says experiment={config.experiment!r} but the subcommand is "
                f"{args.experiment!r}"
            )
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        manifest = run(config, args.out_dir)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    if manifest["message"]:
        print(manifest["message"], file=sys.stderr)
    return manifest["exit_code"]


if __name__ == "__main__":
    sys.exit(main())
