"""Experiment configuration.

File grammar (one key per line)::

    # comment
    key = value

``value`` is, in order of preference, a JSON literal (``64``, ``0.25``,
``"text"``, ``[64, 128]``, ``true``), a comma-separated list of JSON scalars
(``64, 128, 256``), or a bare string (``search``,
``(+ (* x1 x2) (* x2* x1))``).  Unknown keys, duplicate keys and invariant
violations are reported with the offending line number.  A file whose first
non-blank character is ``{`` is read as a single JSON object instead.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields, replace
from pathlib import Path

__all__ = ["ConfigError", "ExperimentConfig", "KINDS", "STRATEGIES", "load_config", "parse_config"]

KINDS = ("couple", "band", "freeness", "concentration", "esd")
STRATEGIES = ("polynomial", "band", "search")
BAND_INPUTS = ("gaussian", "structured", "mixed")


class ConfigError(ValueError):
    def __init__(self, message: str, field_name: str | None = None, line: int | None = None):
        where = f"line {line}: " if line is not None else ""
        what = f"{field_name}: " if field_name else ""
        super().__init__(f"{where}{what}{message}")
        self.field_name = field_name
        self.line = line


def _tuple(value):
    return tuple(value) if isinstance(value, (list, tuple)) else (value,)


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    n_grid: tuple = ()
    reps: int = 1
    seed: int = 0
    # couple / esd
    k: tuple = (8,)
    m: int = 1
    # band / freeness
    epsilon: float = 0.25
    R: float = 1.0
    band_input: str = "mixed"
    # freeness
    word: tuple = ((1, 2, 1, 2),)
    strategy: str = "search"
    adversary_poly: str = "(+ x1 (* 0.5 x1 x1))"
    carrier: str = "(+ (* x1 x2) (* x2* x1))"
    restarts: int = 10
    steps: int = 0
    polys: tuple = ()
    # concentration
    stat: str = "tr1"
    deltas: tuple = (0.02, 0.05)
    # numerics
    unitarity_tol: float = 1e-10
    eig_tol: float = 1e-8
    out: str = "results"

    def __post_init__(self):
        for name in ("n_grid", "k", "deltas", "polys", "word"):
            object.__setattr__(self, name, _coerce(name, getattr(self, name), None))

    def validate(self, lines: dict | None = None) -> "ExperimentConfig":
        lines = lines or {}

        def fail(name, message):
            raise ConfigError(message, name, lines.get(name))

        if self.kind not in KINDS:
            fail("kind", f"must be one of {', '.join(KINDS)}, got {self.kind!r}")
        if not self.n_grid:
            fail("n_grid", "must be nonempty")
        if any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            fail("n_grid", f"must be strictly increasing, got {list(self.n_grid)}")
        if self.n_grid[0] < 2:
            fail("n_grid", "dimensions must be >= 2")
        if self.reps < 1:
            fail("reps", "must be >= 1")
        if not 0 <= self.seed < 2**64:
            fail("seed", "must be an unsigned 64-bit integer")
        if not self.k or min(self.k) < 2:
            fail("k", "values must be >= 2")
        if self.m < 1:
            fail("m", "must be >= 1")
        if not self.epsilon > 0:
            fail("epsilon", "must be positive")
        if not self.R > 0:
            fail("R", "must be positive")
        if self.band_input not in BAND_INPUTS:
            fail("band_input", f"must be one of {', '.join(BAND_INPUTS)}")
        for w in self.word:
            if not w or min(w) < 1 or any(a == b for a, b in zip(w, w[1:])):
                fail("word", f"{list(w)} is not an alternating word of positive indices")
        if self.strategy not in STRATEGIES:
            fail("strategy", f"must be one of {', '.join(STRATEGIES)}")
        if self.restarts < 1:
            fail("restarts", "must be >= 1")
        if self.steps < 0:
            fail("steps", "must be >= 0")
        if not self.deltas or min(self.deltas) <= 0:
            fail("deltas", "values must be positive")
        if not self.unitarity_tol > 0:
            fail("unitarity_tol", "must be positive")
        if not self.eig_tol > 0:
            fail("eig_tol", "must be positive")
        return self

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            out[f.name] = [list(v) for v in value] if f.name == "word" else (
                list(value) if isinstance(value, tuple) else value
            )
        return out

    def with_overrides(self, **overrides) -> "ExperimentConfig":
        overrides = {k: v for k, v in overrides.items() if v is not None}
        return replace(self, **overrides).validate()


_FIELD_TYPES = {f.name: f for f in fields(ExperimentConfig)}
_INT_FIELDS = {"reps", "seed", "m", "restarts", "steps"}
_FLOAT_FIELDS = {"epsilon", "R", "unitarity_tol", "eig_tol"}
_STR_FIELDS = {"kind", "band_input", "strategy", "adversary_poly", "carrier", "stat", "out"}
_INT_LIST_FIELDS = {"n_grid", "k"}


def _parse_value(raw: str):
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        pass
    if "," in raw and not raw.lstrip().startswith("("):
        try:
            return [json.loads(part) for part in raw.split(",")]
        except json.JSONDecodeError:
            pass
    return raw


def _coerce(name: str, value, line: int | None):
    try:
        if name in _INT_FIELDS:
            if isinstance(value, bool) or not float(value).is_integer():
                raise ValueError
            return int(value)
        if name in _FLOAT_FIELDS:
            if isinstance(value, bool):
                raise ValueError
            return float(value)
        if name in _STR_FIELDS:
            return str(value)
        if name in _INT_LIST_FIELDS:
            values = _tuple(value)
            if any(isinstance(v, bool) or not float(v).is_integer() for v in values):
                raise ValueError
            return tuple(int(v) for v in values)
        if name == "deltas":
            return tuple(float(v) for v in _tuple(value))
        if name == "polys":
            return tuple(str(v) for v in _tuple(value))
        if name == "word":
            words = _tuple(value)
            if words and not isinstance(words[0], (list, tuple)):
                words = (words,)
            return tuple(tuple(int(i) for i in w) for w in words)
        return value
    except (TypeError, ValueError):
        raise ConfigError(f"cannot interpret {value!r}", name, line) from None


def parse_config(text: str) -> ExperimentConfig:
    if text.lstrip().startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc.msg}", line=exc.lineno) from None
        lines: dict = {}
    else:
        data, lines = {}, {}
        for lineno, line in enumerate(text.splitlines(), start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise ConfigError("expected 'key = value'", line=lineno)
            key, raw = (s.strip() for s in stripped.split("=", 1))
            if key in data:
                raise ConfigError("duplicate key", key, lineno)
            data[key] = _parse_value(raw)
            lines[key] = lineno

    for key in data:
        if key not in _FIELD_TYPES:
            raise ConfigError("unknown key", key, lines.get(key))
    if "kind" not in data:
        raise ConfigError("missing required key", "kind")
    kwargs = {k: _coerce(k, v, lines.get(k)) for k, v in data.items()}
    try:
        config = ExperimentConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    return config.validate(lines)


def load_config(path: str | Path) -> ExperimentConfig:
    return parse_config(Path(path).read_text())
