"""Flat TOML experiment configs.

A config is a single table of ``key = value`` lines::

    schema = 1
    kind = "mfpt-curve"
    level = 1.0
    direction_prob = 0.5
    speed_plus = 1.0
    speed_minus = 1.0
    reset_rates = [0.2, 0.5, 1.0, 2.0]
    n_paths = 100000
    seed = 7
    output = "out"

Jump laws are given either as a kind string with a separate parameter
(``jump_law_plus = "exp"`` and ``jump_param_plus = 4.0``) or as an inline
table (``jump_law_plus = {kind = "exp", gamma = 4.0}``).
"""

from __future__ import annotations

import re
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .model import ModelParams, ParameterError, jump_law_from_dict, validate_params

SCHEMA_VERSION = 1
KINDS = ("mfpt-curve", "survival-curve", "stationary", "optimize", "figure")
FIGURES = ("fig2", "fig4", "fig6")

_MODEL_KEYS = ("reset_rate", "direction_prob", "speed_plus", "speed_minus", "jump_rate_plus", "jump_rate_minus")
_LAW_KEYS = ("jump_law_plus", "jump_law_minus", "jump_param_plus", "jump_param_minus")
_GRID_KEYS = ("reset_rates", "direction_probs", "times", "omegas")
_OTHER_KEYS = (
    "schema", "kind", "figure", "level", "n_paths", "seed", "output",
    "t_snapshot", "bins", "x_min", "x_max", "bracket",
)
KNOWN_KEYS = frozenset(_MODEL_KEYS + _LAW_KEYS + _GRID_KEYS + _OTHER_KEYS)


class ConfigError(ValueError):
    """Invalid config; ``str()`` is anchored as ``path:line: message`` when the line is known."""

    def __init__(self, message: str, path: str | Path | None = None, line: int | None = None):
        self.message, self.path, self.line = message, path, line
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line else f"{path}: "
        super().__init__(where + message)


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    model: ModelParams | None  # None for figure configs
    level: float = 1.0
    figure: str | None = None
    reset_rates: tuple[float, ...] = ()
    direction_probs: tuple[float, ...] = ()
    times: tuple[float, ...] = ()
    omegas: tuple[float, ...] = ()
    n_paths: int = 100_000
    seed: int = 0
    output: Path = Path("out")
    t_snapshot: float | None = None
    bins: int = 200
    x_range: tuple[float, float] = (-10.0, 10.0)
    bracket: tuple[float, float] | None = None
    source: Path | None = field(default=None, compare=False)

    def curves(self) -> tuple[float, ...]:
        """Direction probabilities to sweep (the model's own if no grid is given)."""
        return self.direction_probs or (self.model.direction_prob,)


def _key_lines(text: str) -> dict[str, int]:
    lines = {}
    for i, raw in enumerate(text.splitlines(), start=1):
        m = re.match(r"\s*\[*\s*([A-Za-z0-9_\-]+)\s*[=\].]", raw)
        if m and m.group(1) not in lines:
            lines[m.group(1)] = i
    return lines


def parse_config(text: str, path: str | Path | None = None) -> ExperimentConfig:
    """Parse and validate config text; raises :class:`ConfigError`."""
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"\(at line (\d+), column \d+\)", str(exc))
        msg = re.sub(r"\s*\(at line \d+, column \d+\)", "", str(exc))
        raise ConfigError(f"syntax error: {msg}", path, int(m.group(1)) if m else None) from None
    lines = _key_lines(text)

    def fail(key: str | None, message: str):
        raise ConfigError(message, path, lines.get(key) if key else None)

    for key, value in data.items():
        if isinstance(value, dict) and key not in ("jump_law_plus", "jump_law_minus"):
            fail(key, f"nested tables are not allowed ({key!r}); the config is flat")
        if key not in KNOWN_KEYS:
            fail(key, f"unknown key {key!r}")

    if "schema" not in data:
        fail(None, "missing required key 'schema'")
    if data["schema"] != SCHEMA_VERSION:
        fail("schema", f"unsupported schema {data['schema']!r} (this version reads schema = {SCHEMA_VERSION})")
    kind = data.get("kind")
    if kind not in KINDS:
        fail("kind" if "kind" in data else None, f"kind must be one of {', '.join(KINDS)}, got {kind!r}")

    def number(key, default=None, integer=False, positive=False):
        if key not in data:
            return default
        value = data[key]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            fail(key, f"{key} must be a number, got {value!r}")
        if integer and not isinstance(value, int):
            fail(key, f"{key} must be an integer, got {value!r}")
        if positive and not value > 0:
            fail(key, f"{key} must be positive, got {value!r}")
        return value

    def grid(key):
        if key not in data:
            return ()
        value = data[key]
        if not isinstance(value, list) or not value:
            fail(key, f"{key} must be a nonempty list of numbers")
        if any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in value):
            fail(key, f"{key} must contain only numbers")
        if any(b <= a for a, b in zip(value, value[1:])):
            fail(key, f"{key} must be sorted in strictly increasing order")
        return tuple(float(v) for v in value)

    grids = {key: grid(key) for key in _GRID_KEYS}
    figure = data.get("figure")
    if kind == "figure":
        if figure not in FIGURES:
            fail("figure" if "figure" in data else None, f"figure must be one of {', '.join(FIGURES)}, got {figure!r}")
    elif figure is not None:
        fail("figure", "'figure' is only meaningful with kind = \"figure\"")
    required = {"mfpt-curve": "reset_rates", "survival-curve": "times"}.get(kind)
    if required and not grids[required]:
        fail(None, f"kind {kind!r} needs a {required} grid")

    level = number("level", 1.0, positive=True)
    n_paths = number("n_paths", 100_000, integer=True)
    if n_paths < 1:
        fail("n_paths", f"n_paths must be >= 1, got {n_paths}")
    seed = number("seed", 0, integer=True)
    if seed < 0:
        fail("seed", "seed must be nonnegative")
    bins = number("bins", 200, integer=True, positive=True)
    x_range = (float(number("x_min", -10.0)), float(number("x_max", 10.0)))
    if not x_range[0] < x_range[1]:
        fail("x_max", "x_min must be below x_max")
    t_snapshot = number("t_snapshot", None, positive=True)
    bracket = None
    if "bracket" in data:
        b = data["bracket"]
        if not (isinstance(b, list) and len(b) == 2 and all(isinstance(v, (int, float)) for v in b) and 0 < b[0] < b[1]):
            fail("bracket", "bracket must be [lo, hi] with 0 < lo < hi")
        bracket = (float(b[0]), float(b[1]))
    output = data.get("output", "out")
    if not isinstance(output, str) or not output:
        fail("output", "output must be a nonempty path string")
    out_path = Path(output)
    if path is not None and not out_path.is_absolute():
        out_path = Path(path).parent / out_path

    model = None
    if kind != "figure":
        model = _model(data, grids, fail, kind)
    return ExperimentConfig(
        kind=kind, model=model, level=float(level), figure=figure,
        reset_rates=grids["reset_rates"], direction_probs=grids["direction_probs"],
        times=grids["times"], omegas=grids["omegas"], n_paths=int(n_paths), seed=int(seed),
        output=out_path, t_snapshot=t_snapshot, bins=int(bins), x_range=x_range,
        bracket=bracket, source=Path(path) if path is not None else None,
    )


def _law(data, side: str, fail):
    key, pkey = f"jump_law_{side}", f"jump_param_{side}"
    spec = data.get(key)
    if spec is None:
        if pkey in data:
            fail(pkey, f"{pkey} given without {key}")
        return {"kind": "zero"}
    if isinstance(spec, dict):
        return spec
    if not isinstance(spec, str):
        fail(key, f"{key} must be a string or inline table")
    kind = spec.lower()
    if kind in ("zero", "none"):
        return {"kind": "zero"}
    if pkey not in data:
        fail(key, f"jump law {spec!r} needs {pkey}")
    name = {"exp": "gamma", "exponential": "gamma", "fixed": "size", "deterministic": "size"}.get(kind)
    if name is None:
        fail(key, f"unknown jump law kind {spec!r} (expected exp, fixed or zero)")
    return {"kind": kind, name: data[pkey]}


def _model(data, grids, fail, kind) -> ModelParams:
    values = {}
    for key in _MODEL_KEYS:
        if key in data:
            v = data[key]
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                fail(key, f"{key} must be a number, got {v!r}")
            values[key] = float(v)
    values.setdefault("reset_rate", grids["reset_rates"][0] if grids["reset_rates"] else None)
    if kind == "optimize" and values["reset_rate"] is None:
        values["reset_rate"] = 1.0  # placeholder; the rate is what gets optimized
    values.setdefault("direction_prob", grids["direction_probs"][0] if grids["direction_probs"] else None)
    for key in ("reset_rate", "direction_prob"):
        if values[key] is None:
            fail(None, f"missing required key {key!r} (or a {key}s grid)")
    laws = {}
    for side in ("plus", "minus"):
        try:
            laws[f"jump_law_{side}"] = jump_law_from_dict(_law(data, side, fail))
        except ParameterError as exc:
            fail(f"jump_law_{side}", str(exc))
    model = ModelParams(**values, **laws)
    # every swept value must give a valid process, not just the template
    for rate in grids["reset_rates"] or (model.reset_rate,):
        for rho in grids["direction_probs"] or (model.direction_prob,):
            try:
                validate_params(replace(model, reset_rate=rate, direction_prob=rho))
            except ParameterError as exc:
                culprit = next((k for k in _MODEL_KEYS + _GRID_KEYS if k in str(exc) and k in data), None)
                if culprit is None and "direction probability" in str(exc):
                    culprit = "direction_probs" if "direction_probs" in data else "direction_prob"
                if culprit is None and "frozen" in str(exc):
                    culprit = "speed_plus" if "frozen +" in str(exc) else "speed_minus"
                fail(culprit, str(exc))
    return model


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", path) from None
    return parse_config(text, path)
