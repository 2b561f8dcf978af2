"""Experiment configuration: a flat ``key = value`` text file plus flag overrides.

Recognized keys (all optional)::

    example        example id from the registry, or "custom"
    kind           curl | div
    r              comma list of orders
    levels         comma list of 1/h values
    n              mesh level for layer examples (default 32)
    s1, s2, enrich true | false; setting any of them runs a single variant
    out            output directory
    deterministic  true | false
    large          true | false (adds the 1/h = 32 level for 3D examples)
    resolution     sampling intervals per axis for field dumps
    cf_strategy    pointwise | facet
    solver_tol     relative residual tolerance
    beta, gamma, exact, inflow   custom problem data (names from the registry)

Blank lines and ``#`` comments are ignored.
"""

from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Optional

from .errors import ConfigurationError


@dataclass(frozen=True)
class ExperimentConfig:
    example: Optional[str] = None
    kind: Optional[str] = None
    r: Optional[tuple] = None
    levels: Optional[tuple] = None
    n: Optional[int] = None
    s1: Optional[bool] = None
    s2: Optional[bool] = None
    enrich: Optional[bool] = None
    out: str = "results"
    deterministic: bool = False
    large: bool = False
    resolution: Optional[int] = None
    cf_strategy: str = "pointwise"
    solver_tol: float = 1e-10
    beta: Optional[str] = None
    gamma: float = 1.0
    exact: Optional[str] = None
    inflow: Optional[str] = None

    def merged(self, **overrides):
        """Copy with every non-None override applied (flags win over the file)."""
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})

    @property
    def toggles_set(self):
        return any(v is not None for v in (self.s1, self.s2, self.enrich))


def _bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _ints(text):
    vals = tuple(int(v) for v in text.replace(" ", "").split(",") if v)
    if not vals:
        raise ValueError("empty list")
    return vals


_PARSERS = {"r": _ints, "levels": _ints, "n": int, "resolution": int, "s1": _bool, "s2": _bool,
            "enrich": _bool, "deterministic": _bool, "large": _bool, "solver_tol": float,
            "gamma": float}
_KEYS = {f.name for f in fields(ExperimentConfig)}


def parse_config(text, source="<config>"):
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = (s.strip() for s in line.partition("="))
        if key not in _KEYS:
            raise ConfigurationError(f"{source}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigurationError(f"{source}:{lineno}: duplicate key {key!r}")
        try:
            values[key] = _PARSERS.get(key, str)(value)
        except ValueError as exc:
            raise ConfigurationError(f"{source}:{lineno}: bad value for {key}: {exc}") from None
    return ExperimentConfig(**values)


def load_config(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, str(path))
