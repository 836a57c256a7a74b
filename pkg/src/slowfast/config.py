"""Flat key-value experiment configs.

One ``key = value`` per line; ``#`` starts a comment; dotted keys group
related settings (``tol.rel_tol``, ``output.max_points``). Values are Python
literals (numbers, quoted strings, ``[a, b]`` lists); an unquoted word is
read as a string.
"""
from __future__ import annotations

import ast
import difflib
import math
from dataclasses import dataclass

from .errors import ConfigError
from .ode import ToleranceConfig

EXPERIMENTS = (
    "simulate",
    "bernoulli-check",
    "delay-report",
    "crossings",
    "asymptote-check",
    "canard-scan",
)


@dataclass(frozen=True)
class Key:
    kind: str  # float, int, str, floats
    default: object = None
    check: str | None = None  # ">0", ">=0", "choice", "len2"
    choices: tuple = ()
    label: str | None = None  # name used in messages, e.g. the Greek symbol


_DEFAULT_TOL = ToleranceConfig()

SCHEMA = {
    "experiment": Key("str", None, "choice", EXPERIMENTS),
    "model": Key("str", "enhanced", "choice", ("enhanced", "transcritical", "vdp")),
    "epsilon": Key("float", None, ">0", label="ε"),
    "c": Key("float", 0.0),
    "x0": Key("float", None),
    "y0": Key("float", None),
    "chart": Key("str", "UY", "choice", ("UY", "XY")),
    "t_end": Key("float", 100.0, ">0"),
    "delta": Key("float", 0.05, ">0", label="δ"),
    "T": Key("float", 10.0, ">=0"),
    "horizon": Key("float", 200.0, ">0"),
    "n_crossings": Key("int", 10, ">0"),
    "max_time": Key("float", 0.0, ">=0"),  # 0 selects the built-in budget
    "epsilon_list": Key("floats", None, ">0", label="ε list"),
    "x0_list": Key("floats", None),
    "c_range": Key("floats", [-0.2, 0.05], "len2"),
    "thresholds": Key("floats", [0.25, 0.75], "len2"),
    "tol_c": Key("float", 1e-8, ">0"),
    "workers": Key("int", 1, ">0"),
    "transient": Key("float", 20.0, ">0"),  # canard runs, in units of 1/epsilon
    "window": Key("float", 40.0, ">0"),
    "tol.rel_tol": Key("float", _DEFAULT_TOL.rel_tol, ">0"),
    "tol.abs_tol": Key("float", _DEFAULT_TOL.abs_tol, ">0"),
    "tol.max_step": Key("float", _DEFAULT_TOL.max_step, ">0"),
    "tol.min_step": Key("float", _DEFAULT_TOL.min_step, ">0"),
    "tol.event_time_tol": Key("float", _DEFAULT_TOL.event_time_tol, ">0"),
    "tol.max_steps": Key("int", _DEFAULT_TOL.max_steps, ">0"),
    "output.max_points": Key("int", 0, ">=0"),  # 0 keeps every sample
    "output.prefix": Key("str", ""),
}

REQUIRED = {
    "simulate": ("epsilon", "x0", "y0"),
    "bernoulli-check": (("epsilon", "epsilon_list"), ("x0", "x0_list"), "y0"),
    "delay-report": ("epsilon", "x0", "y0"),
    "crossings": ("epsilon", "x0", "y0"),
    "asymptote-check": ("epsilon", "x0"),
    "canard-scan": ("epsilon_list",),
}


@dataclass(frozen=True)
class ExperimentConfig:
    values: tuple  # sorted (key, value) pairs, defaults applied

    def __getitem__(self, key):
        # optional keys without a default read as None
        if key not in SCHEMA:
            raise KeyError(key)
        return dict(self.values).get(key)

    def as_dict(self) -> dict:
        return dict(self.values)

    @property
    def experiment(self) -> str:
        return self["experiment"]

    def tolerances(self) -> ToleranceConfig:
        d = self.as_dict()
        return ToleranceConfig(**{k[4:]: d[k] for k in d if k.startswith("tol.")})


def _name(key):
    label = SCHEMA[key].label
    return f"{key} ({label})" if label else key


def _coerce(key, raw):
    spec = SCHEMA[key]
    if spec.kind == "str":
        if not isinstance(raw, str):
            raise ConfigError(f"{key}: expected a string, got {raw!r}")
        value = raw
    elif spec.kind == "int":
        if isinstance(raw, bool) or not isinstance(raw, int):
            if isinstance(raw, float) and raw.is_integer():
                raw = int(raw)
            else:
                raise ConfigError(f"{key}: expected an integer, got {raw!r}")
        value = raw
    elif spec.kind == "float":
        if isinstance(raw, str) and raw.lower().lstrip("+-") in ("nan", "inf", "infinity"):
            raise ConfigError(f"{_name(key)}: must be finite, got {raw!r}")
        if isinstance(raw, bool) or not isinstance(raw, (int, float)):
            raise ConfigError(f"{_name(key)}: expected a number, got {raw!r}")
        value = float(raw)
        if not math.isfinite(value):
            raise ConfigError(f"{_name(key)}: must be finite, got {raw!r}")
    else:
        if isinstance(raw, (int, float)) and not isinstance(raw, bool):
            raw = [raw]
        if not isinstance(raw, (list, tuple)) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in raw
        ):
            raise ConfigError(f"{_name(key)}: expected a list of numbers, got {raw!r}")
        value = [float(v) for v in raw]
        if not all(math.isfinite(v) for v in value):
            raise ConfigError(f"{_name(key)}: entries must be finite")

    vals = value if isinstance(value, list) else [value]
    if spec.check == ">0" and not all(v > 0 for v in vals):
        raise ConfigError(f"{_name(key)}: must be > 0, got {value!r}")
    if spec.check == ">=0" and not all(v >= 0 for v in vals):
        raise ConfigError(f"{_name(key)}: must be >= 0, got {value!r}")
    if spec.check == "choice" and value not in spec.choices:
        raise ConfigError(f"{key}: must be one of {', '.join(spec.choices)}; got {value!r}")
    if spec.check == "len2" and len(value) != 2:
        raise ConfigError(f"{key}: expected exactly two numbers, got {value!r}")
    return value


def _unknown(key):
    close = difflib.get_close_matches(key, SCHEMA, n=1, cutoff=0.6)
    hint = f"; did you mean {close[0]!r}?" if close else ""
    return ConfigError(f"unknown key {key!r}{hint}")


def _parse_value(text):
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        return text


def parse_lines(text: str) -> dict:
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = _parse_value(value)
    return raw


def build_config(raw: dict) -> ExperimentConfig:
    """Validate a flat mapping and apply defaults."""
    for key in raw:
        if key not in SCHEMA:
            raise _unknown(key)
    if "experiment" not in raw:
        raise ConfigError(f"missing key 'experiment' (one of {', '.join(EXPERIMENTS)})")
    values = {k: _coerce(k, v) for k, v in raw.items()}
    for need in REQUIRED[values["experiment"]]:
        options = need if isinstance(need, tuple) else (need,)
        if not any(k in values for k in options):
            names = " or ".join(repr(_name(k)) for k in options)
            raise ConfigError(f"missing key {names} required by {values['experiment']}")
    for key, spec in SCHEMA.items():
        if key not in values and spec.default is not None:
            values[key] = list(spec.default) if isinstance(spec.default, list) else spec.default
    if values["tol.min_step"] >= values["tol.max_step"]:
        raise ConfigError("tol.min_step must be smaller than tol.max_step")
    frozen = tuple(sorted((k, tuple(v) if isinstance(v, list) else v) for k, v in values.items()))
    return ExperimentConfig(frozen)


def parse_config(text: str, overrides=()) -> ExperimentConfig:
    raw = parse_lines(text)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, value = (part.strip() for part in item.split("=", 1))
        raw[key] = _parse_value(value)
    return build_config(raw)


def _format(value) -> str:
    if isinstance(value, str):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(repr(float(v)) for v in value) + "]"
    return repr(value)


def serialize(config: ExperimentConfig) -> str:
    return "".join(f"{k} = {_format(v)}\n" for k, v in config.values)
