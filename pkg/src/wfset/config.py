"""TOML run configurations for the command line front end.

Every table has a fixed key set; unknown keys raise :class:`ConfigError`
naming the offending key.  See the README for the schema.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .coeffs import MODEL_KEYS, RadialModel, model_from_config
from .errors import ConfigError, WFSetError
from .windows import WindowSpec, window_from_config

TOP_KEYS = {"out", "seed", "mode", "model", "window", "grid", "signal", "solver", "validate",
            "flow", "wpt", "transport", "query"}
SECTION_KEYS = {
    "model": MODEL_KEYS,
    "window": {"kind", "orders", "poly", "family"},
    "grid": {"L", "N"},
    "signal": {"kind", "width", "center", "momentum", "focus_time", "source", "mollify"},
    "solver": {"dt", "stability", "drift_tol", "t0", "t1"},
    "validate": {"alpha_max", "samples", "r_max", "times"},
    "flow": {"t", "points", "samples", "backend"},
    "wpt": {"lam", "t", "x", "xi_center", "xi_count", "xi_refine", "xi"},
    "transport": {"t", "lambdas", "points"},
    "query": {"t", "x0", "xi0", "r", "gamma", "a", "lambdas", "lambda_min", "lambda_max", "lambda_count",
              "order", "margin", "residual_threshold", "per_axis", "directions", "radii"},
}
MODES = ("full-flow", "free-shift")


@dataclass
class RunConfig:
    """Parsed configuration; sections are plain dicts checked against the schema."""

    path: Path | None
    out: Path
    seed: int | None = None
    mode: str = "full-flow"
    sections: dict = field(default_factory=dict)

    def section(self, name: str, required: bool = False) -> dict:
        if name not in self.sections:
            if required:
                raise ConfigError(f"missing [{name}] section")
            return {}
        return self.sections[name]

    def model(self) -> RadialModel:
        return model_from_config(self.section("model"))

    @property
    def n(self) -> int:
        return int(self.section("model").get("n", 1))

    def window(self) -> WindowSpec:
        sec = {k: v for k, v in self.section("window").items() if k != "family"}
        try:
            return window_from_config(sec, self.n)
        except WFSetError as exc:
            raise ConfigError(str(exc)) from exc

    def get(self, section: str, key: str, default=None, required: bool = False):
        sec = self.section(section, required)
        if key not in sec:
            if required:
                raise ConfigError(f"missing key {section}.{key}")
            return default
        return sec[key]


def _check(name, table, allowed):
    if not isinstance(table, dict):
        raise ConfigError(f"[{name}] must be a table")
    for key in sorted(table):
        if key not in allowed:
            raise ConfigError(f"unknown key '{name}.{key}'" if name else f"unknown key '{key}'")


def parse_config(data: dict, path: Path | None = None) -> RunConfig:
    _check("", data, TOP_KEYS)
    sections = {}
    for name, allowed in SECTION_KEYS.items():
        if name in data:
            _check(name, data[name], allowed)
            sections[name] = dict(data[name])
    mode = data.get("mode", "full-flow")
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")
    seed = data.get("seed")
    if seed is not None and not isinstance(seed, int):
        raise ConfigError("seed must be an integer")
    out = Path(data.get("out", "results"))
    if path is not None and not out.is_absolute():
        out = path.parent / out
    return RunConfig(path, out, seed, mode, sections)


def load_config(path) -> RunConfig:
    """Read and validate a TOML configuration file.

    Raises
    ------
    ConfigError
        Missing file, malformed TOML or unknown keys.
    """
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    try:
        data = tomllib.loads(raw.decode())
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    return parse_config(data, path)


def as_points(value, n: int, what: str) -> np.ndarray:
    """``[[...], ...]`` or a flat list (``n = 1``) as an ``(m, n)`` array."""
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{what} must be numeric") from exc
    if arr.ndim <= 1 and n == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2 or arr.shape[1] != n:
        raise ConfigError(f"{what} must be a list of {n}-vectors")
    return arr
