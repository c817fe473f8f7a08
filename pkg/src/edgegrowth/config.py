"""Experiment configuration: a flat ``key = value`` file plus flag overrides.

Unset fields (``None``) fall back to the per-command defaults in
:data:`COMMAND_DEFAULTS`.  ``parse_config(emit_config(cfg)) == cfg`` holds for
every config.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from typing import Any

import numpy as np

COMMANDS = ("check-algebra", "verify-cocycle", "verify-vanishing", "verify-derivatives",
            "multiplier-norm", "growth-scan", "annulus-scan", "unitarity", "interpolate")

Range = tuple[float, float, float]


class ConfigError(ValueError):
    """Bad configuration; ``line`` and ``key`` locate the problem when known."""

    def __init__(self, message: str, line: int | None = None, key: str | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"field {key!r}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.line = line
        self.key = key


def parse_range(text: str) -> Range:
    """``a:b:step`` (or a single number ``a``) as an inclusive range."""
    parts = str(text).split(":")
    try:
        if len(parts) == 1:
            a = float(parts[0])
            return (a, a, 1.0)
        if len(parts) != 3:
            raise ValueError
        a, b, step = map(float, parts)
    except ValueError:
        raise ConfigError(f"expected a:b:step, got {text!r}") from None
    if step <= 0 or b < a:
        raise ConfigError(f"empty or descending range {text!r}")
    return (a, b, step)


def expand_range(r: Range) -> list[float]:
    a, b, step = r
    count = int(math.floor((b - a) / step + 1e-9)) + 1
    return [round(a + i * step, 12) for i in range(count)]


def format_range(r: Range) -> str:
    return ":".join(_fmt_float(x) for x in r)


def _fmt_float(x: float) -> str:
    return repr(float(x))


def parse_alpha(text) -> str | float:
    if isinstance(text, (int, float)):
        return float(text)
    if str(text).strip().lower() == "qhalf":
        return "Qhalf"
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"alpha must be a number or 'Qhalf', got {text!r}") from None


@dataclass(frozen=True)
class ExperimentConfig:
    command: str | None = None
    field: str | None = None
    n: int | None = None
    m: int | None = None
    box: float | None = None
    t_range: Range | None = None
    b_range: Range | None = None
    alpha: str | float | None = None
    samples: int | None = None
    seed: int | None = None
    tol: float | None = None
    out: str | None = None
    format: str | None = None
    tmax: float | None = None
    cutoff_inner: float | None = None
    cutoff_outer: float | None = None
    annulus: tuple[float, float, float, float] | None = None
    trials: int | None = None
    beta_max: float | None = None
    slope_max: float | None = None
    ratio_max: float | None = None
    stability: float | None = None
    max_words: int | None = None

    def __post_init__(self):
        if self.command is not None and self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}", key="command")
        if self.field is not None and self.field not in ("R", "C", "H"):
            raise ConfigError(f"field must be R, C or H, got {self.field!r}", key="field")
        if self.n is not None and self.n < 2:
            raise ConfigError("n must be >= 2", key="n")
        if self.m is not None and (self.m < 5 or self.m % 2 == 0):
            raise ConfigError("m must be odd and >= 5", key="m")
        if self.format is not None and self.format not in ("csv", "json"):
            raise ConfigError("format must be csv or json", key="format")
        for key in ("samples", "trials", "max_words"):
            v = getattr(self, key)
            if v is not None and v <= 0:
                raise ConfigError("must be positive", key=key)

    def merged(self, overrides: "ExperimentConfig") -> "ExperimentConfig":
        """Fields set in ``overrides`` win."""
        vals = {f.name: getattr(overrides, f.name) for f in fields(self)
                if getattr(overrides, f.name) is not None}
        return replace(self, **vals)

    def resolved(self) -> "ExperimentConfig":
        """Fill unset fields from the command defaults."""
        if self.command is None:
            raise ConfigError("no command given", key="command")
        base = ExperimentConfig(command=self.command, **COMMAND_DEFAULTS[self.command])
        return base.merged(self)

    def t_values(self) -> list[float]:
        return expand_range(self.t_range)

    def b_values(self) -> list[float]:
        return expand_range(self.b_range)


_COMMON = dict(field="C", n=2, seed=0, format="csv")

COMMAND_DEFAULTS: dict[str, dict[str, Any]] = {
    "check-algebra": dict(_COMMON, samples=100_000, tol=1e-12),
    "verify-cocycle": dict(_COMMON, samples=10_000, tmax=10.0, tol=1e-9),
    "verify-vanishing": dict(_COMMON, max_words=4096),
    "verify-derivatives": dict(_COMMON, samples=100_000, tmax=10.0, stability=0.10,
                               max_words=1024, b_range=(-100.0, 100.0, 200.0)),
    "multiplier-norm": dict(_COMMON, m=13, box=3.0, alpha="Qhalf", t_range=(1.0, 1.0, 1.0),
                            b_range=(4.0, 4.0, 1.0), cutoff_inner=0.5, cutoff_outer=1.0,
                            tol=1e-6),
    "growth-scan": dict(_COMMON, m=17, box=3.0, alpha="Qhalf", t_range=(0.0, 3.0, 0.5),
                        b_range=(0.0, 20.0, 2.0), cutoff_inner=0.5, cutoff_outer=1.0,
                        tol=1e-6, beta_max=None, slope_max=0.3),
    "annulus-scan": dict(_COMMON, m=17, box=10.0, alpha="Qhalf", t_range=(1.0, 6.0, 1.0),
                         b_range=(10.0, 10.0, 1.0), annulus=(1.0, 1.5, 2.5, 3.0),
                         tol=1e-6, ratio_max=2.0),
    "unitarity": dict(_COMMON, samples=1_000_000, trials=10, tmax=1.0),
    "interpolate": dict(_COMMON, tol=1e-6),
}

# parsing ------------------------------------------------------------------

_KINDS = {
    "command": str, "field": str, "n": int, "m": int, "box": float, "t_range": "range",
    "b_range": "range", "alpha": "alpha", "samples": int, "seed": int, "tol": float,
    "out": str, "format": str, "tmax": float, "cutoff_inner": float, "cutoff_outer": float,
    "annulus": "quad", "trials": int, "beta_max": float, "slope_max": float,
    "ratio_max": float, "stability": float, "max_words": int,
}


def _convert(key: str, raw: str, line: int | None = None):
    kind = _KINDS.get(key)
    if kind is None:
        raise ConfigError(f"unknown key {key!r}", line=line, key=key)
    try:
        if kind == "range":
            return parse_range(raw)
        if kind == "alpha":
            return parse_alpha(raw)
        if kind == "quad":
            vals = tuple(float(v) for v in raw.split(","))
            if len(vals) != 4 or list(vals) != sorted(vals):
                raise ConfigError("annulus needs four increasing radii r0,r1,r2,r3")
            return vals
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
        return raw
    except ConfigError as exc:
        raise ConfigError(str(exc), line=line, key=key) from None
    except ValueError:
        raise ConfigError(f"cannot read {raw!r} as {getattr(kind, '__name__', kind)}",
                          line=line, key=key) from None


def parse_config(text: str) -> ExperimentConfig:
    vals = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected key = value, got {raw.strip()!r}", line=lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key in vals:
            raise ConfigError("duplicate key", line=lineno, key=key)
        vals[key] = _convert(key, value, lineno)
    try:
        return ExperimentConfig(**vals)
    except ConfigError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path: str) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config(fh.read())


def _emit_value(v) -> str:
    if isinstance(v, tuple) and len(v) == 3:
        return format_range(v)
    if isinstance(v, tuple):
        return ",".join(_fmt_float(x) for x in v)
    if isinstance(v, float):
        return _fmt_float(v)
    return str(v)


def emit_config(cfg: ExperimentConfig) -> str:
    lines = []
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        if v is not None:
            lines.append(f"{f.name} = {_emit_value(v)}")
    return "\n".join(lines) + "\n"


def config_echo(cfg: ExperimentConfig) -> dict:
    out = {}
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        if v is not None:
            out[f.name] = list(v) if isinstance(v, tuple) else v
    return out


def spawn_seeds(seed: int, count: int) -> list[int]:
    """Independent child seeds, so every random draw derives from one seed."""
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(count)]
