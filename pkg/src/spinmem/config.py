"""Flat key=value run configuration with full-file validation.

The format is deliberately minimal: one `key = value` pair per line, `#`
comments, no sections.  Parsing collects every violation (unknown keys,
type errors, range errors) instead of stopping at the first, so a bad file
is fixed in one round.  A JSON run manifest emitted by the CLI can be fed
back in place of a config file; its echoed config reproduces the run.
"""

import json
from dataclasses import dataclass, fields

from .model import ETA_MIN


class ConfigError(ValueError):
    """One or more config violations; `violations` lists them all."""

    def __init__(self, violations):
        self.violations = tuple(violations)
        super().__init__("\n".join(self.violations))


@dataclass(frozen=True)
class RunConfig:
    """Every knob the CLI pipelines accept, with run-ready defaults."""

    N: int = 50
    M: int = 2
    theta: float = 0.9
    s: float = 0.25
    omega: float = 1.0
    drive: float = 1.0
    eta: float = 1.0
    eta_grid: tuple = (1.0, 2.0, 4.0, 8.0)
    T_grid: tuple = (0.5, 0.8, 1.0, 1.3, 2.0)
    g_sq: float = 2.0
    de_min: float = -40.0
    de_max: float = 40.0
    grid_step: float = 0.5
    n_traj: int = 200
    n_distr: int = 30
    t_end: float = None
    n_samples: int = 400
    workers: int = 1
    seed: int = 0
    sweeps: int = 2000
    burn_in: float = 0.5
    window: float = 0.25
    drift_tol: float = 0.05
    init: str = "random"
    init_pattern: int = 0
    init_overlap: float = 0.6
    n_jumps: int = 100000
    format_version: int = 1
    out_dir: str = "."

    def __post_init__(self):
        violations = [
            message
            for key, (check, message) in _RANGE_CHECKS.items()
            if not check(getattr(self, key))
        ]
        if violations:
            raise ConfigError(violations)


def _parse_bool_free_scalar(kind, text):
    if kind is int:
        return int(text, 10)
    if kind is float:
        return float(text)
    return text


def _parse_value(key, kind, text):
    if kind is tuple:
        parts = [p.strip() for p in text.split(",") if p.strip()]
        if not parts:
            raise ValueError("empty list")
        return tuple(float(p) for p in parts)
    if kind is float and text.strip().lower() == "none":
        return None
    return _parse_bool_free_scalar(kind, text.strip())


_RANGE_CHECKS = {
    "N": (lambda v: v >= 2, "N must be >= 2"),
    "M": (lambda v: v >= 1, "M must be >= 1"),
    "theta": (lambda v: 0.0 <= v < 1.0, "theta must satisfy 0 <= theta < 1"),
    "s": (lambda v: v >= 0.0, "s must be >= 0"),
    "omega": (lambda v: v > 0.0, "omega must be positive"),
    "drive": (lambda v: v > 0.0, "drive must be positive"),
    "eta": (lambda v: v >= ETA_MIN, "eta must be >= eta_min (%g)" % ETA_MIN),
    "eta_grid": (
        lambda v: all(e >= ETA_MIN for e in v),
        "eta_grid entries must be >= eta_min (%g)" % ETA_MIN,
    ),
    "T_grid": (lambda v: all(t > 0.0 for t in v), "T_grid entries must be positive"),
    "g_sq": (lambda v: v > 0.0, "g_sq must be positive"),
    "grid_step": (lambda v: v > 0.0, "grid_step must be positive"),
    "n_traj": (lambda v: v >= 1, "n_traj must be >= 1"),
    "n_distr": (lambda v: v >= 1, "n_distr must be >= 1"),
    "t_end": (lambda v: v is None or v > 0.0, "t_end must be positive"),
    "n_samples": (lambda v: v >= 8, "n_samples must be >= 8"),
    "workers": (lambda v: v >= 1, "workers must be >= 1"),
    "sweeps": (lambda v: v >= 1, "sweeps must be >= 1"),
    "burn_in": (lambda v: 0.0 <= v < 1.0, "burn_in must lie in [0, 1)"),
    "window": (lambda v: 0.0 < v <= 1.0, "window must lie in (0, 1]"),
    "drift_tol": (lambda v: v > 0.0, "drift_tol must be positive"),
    "init": (lambda v: v in ("random", "pattern"), "init must be random or pattern"),
    "init_pattern": (lambda v: v >= 0, "init_pattern must be >= 0"),
    "init_overlap": (
        lambda v: -1.0 <= v <= 1.0,
        "init_overlap must lie in [-1, 1]",
    ),
    "n_jumps": (lambda v: v >= 1, "n_jumps must be >= 1"),
    "format_version": (lambda v: v >= 1, "format_version must be >= 1"),
}

_FIELD_TYPES = {
    f.name: f.type if isinstance(f.type, str) else f.type.__name__
    for f in fields(RunConfig)
}
_TYPE_OBJECTS = {"int": int, "float": float, "tuple": tuple, "str": str}


def _assemble(pairs):
    """Validate (key, value-text, location) triples into a RunConfig."""
    violations = []
    resolved = {}
    seen = {}
    for key, text, where in pairs:
        if key not in _FIELD_TYPES:
            violations.append("%s: unknown key '%s'" % (where, key))
            continue
        if key in seen:
            violations.append(
                "%s: duplicate key '%s' (already set at %s)" % (where, key, seen[key])
            )
            continue
        seen[key] = where
        kind = _TYPE_OBJECTS[_FIELD_TYPES[key]]
        try:
            value = _parse_value(key, kind, text)
        except ValueError:
            violations.append(
                "%s: %s expects %s, got '%s'" % (where, key, kind.__name__, text)
            )
            continue
        check = _RANGE_CHECKS.get(key)
        if check is not None and not check[0](value):
            violations.append("%s: %s" % (where, check[1]))
            continue
        resolved[key] = value
    if violations:
        raise ConfigError(violations)
    return RunConfig(**resolved)


def parse_config(text):
    """Parse flat key=value text; raises ConfigError listing all problems."""
    pairs = []
    violations = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            violations.append("line %d: expected 'key = value'" % lineno)
            continue
        key, text_value = line.split("=", 1)
        pairs.append((key.strip(), text_value.strip(), "line %d" % lineno))
    if violations:
        # still surface key-level problems on the parseable lines
        try:
            _assemble(pairs)
        except ConfigError as exc:
            violations.extend(exc.violations)
        raise ConfigError(violations)
    return _assemble(pairs)


def config_from_manifest(text):
    """RunConfig from a run manifest's echoed config section."""
    manifest = json.loads(text)
    echo = manifest.get("config")
    if not isinstance(echo, dict):
        raise ConfigError(["manifest has no 'config' object"])
    pairs = []
    for key, value in echo.items():
        if isinstance(value, (list, tuple)):
            text_value = ",".join(repr(float(v)) for v in value)
        elif value is None:
            text_value = "none"
        else:
            text_value = str(value)
        pairs.append((key, text_value, "manifest config"))
    return _assemble(pairs)


def load_config(path):
    """Read a config file; JSON manifests are detected and replayed."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    if text.lstrip().startswith("{"):
        return config_from_manifest(text)
    return parse_config(text)


def config_echo(cfg):
    """JSON-ready dict of every field, for embedding in run manifests."""
    echo = {}
    for f in fields(RunConfig):
        value = getattr(cfg, f.name)
        echo[f.name] = list(value) if isinstance(value, tuple) else value
    return echo
