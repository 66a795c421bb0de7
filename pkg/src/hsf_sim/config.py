"""Experiment configuration in plain ``key=value`` text."""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from typing import Dict

from .gateway import Ordering
from .node import BASIC, Variant, VariantError


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    n: int = 10
    variant: Variant = BASIC
    ordering: Ordering = Ordering.SW_NE_X
    horizon: int = 300
    runs: int = 1000
    seed: int = 0
    trace: bool = False
    # ticks between gateway injection attempts
    injection_period: int = 1
    # 2 lets a parallel node commit both outputs in one tick
    parallel_sends: int = 1
    refill: bool = False

    def __post_init__(self):
        if self.n < 2 or self.n % 2:
            raise ConfigError("n must be even")
        if self.horizon < 1:
            raise ConfigError("horizon must be positive")
        if self.runs < 1:
            raise ConfigError("runs must be positive")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        if self.injection_period < 1:
            raise ConfigError("injection_period must be positive")
        if self.parallel_sends not in (1, 2):
            raise ConfigError("parallel_sends must be 1 or 2")

    def with_(self, **kw) -> "ExperimentConfig":
        return replace(self, **kw)


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _int(text: str) -> int:
    return int(text.strip(), 10)


_PARSERS = {
    "n": _int,
    "variant": Variant.parse,
    "ordering": Ordering.parse,
    "horizon": _int,
    "runs": _int,
    "seed": _int,
    "trace": _bool,
    "injection_period": _int,
    "parallel_sends": _int,
    "refill": _bool,
}


def parse_config(text: str, base: ExperimentConfig | None = None) -> ExperimentConfig:
    values: Dict[str, object] = {}
    lines: Dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.lower()
        if key not in _PARSERS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            values[key] = _PARSERS[key](value)
        except (ValueError, VariantError) as exc:
            raise ConfigError(f"line {lineno}: {exc}") from None
        lines[key] = lineno
    try:
        return replace(base or ExperimentConfig(), **values)
    except ConfigError as exc:
        # point at the line that set the offending key
        key = next((k for k in lines if str(exc).startswith(k)), None)
        where = f"line {lines[key]}: " if key else ""
        raise ConfigError(f"{where}{exc}") from None


def render_config(cfg: ExperimentConfig) -> str:
    out = []
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        if isinstance(v, Variant):
            v = v.name
        elif isinstance(v, Ordering):
            v = v.value
        elif isinstance(v, bool):
            v = "true" if v else "false"
        out.append(f"{f.name}={v}")
    return "\n".join(out) + "\n"
