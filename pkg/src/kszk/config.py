"""Flat ``key = value`` run configuration.

Example::

    # admissible benchmark
    n = 2
    lengths = 1, 1
    modes = 32, 32
    dt = 1e-5
    t_end = 0.05
    ic.kind = potential_bump
    ic.amplitude = 0.5

Unknown keys are rejected.  ``serialize`` writes every set key in a fixed
order with canonical value formatting, so ``serialize(parse(text))`` is the
canonical form of ``text``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from typing import Iterable, Optional

from .errors import ConfigurationError
from .geometry import DomainSpec
from .solver import IC_KINDS, SCHEMES, InitialData, SolverConfig
from .spectral import ModeGrid

__all__ = ["RunConfig", "SweepSpec", "parse_config", "serialize_config", "load_config", "apply_overrides"]


@dataclass(frozen=True)
class RunConfig:
    n: int
    lengths: tuple[float, ...]
    modes: tuple[int, ...]
    grid_points: Optional[tuple[int, ...]] = None
    dt: float = 1e-5
    t_end: float = 0.05
    scheme: str = "cnab2"
    zk: bool = True
    nonlinear: bool = True
    dealias: bool = True
    record_every: int = 10
    ic_kind: str = "potential_bump"
    ic_amplitude: float = 0.1
    ic_mode: Optional[tuple[int, ...]] = None
    seed: int = 0
    c_s: Optional[float] = None
    output_path: str = "kszk_series.csv"
    sweep_scale: Optional[tuple[float, float, int]] = None
    sweep_amplitude: Optional[tuple[float, float, int]] = None

    def domain(self) -> DomainSpec:
        return DomainSpec(self.n, self.lengths)

    def grid(self) -> ModeGrid:
        return ModeGrid.create(self.domain(), self.modes, self.grid_points)

    def initial_data(self) -> InitialData:
        return InitialData(self.ic_kind, self.ic_amplitude, self.ic_mode, self.seed)

    def solver_config(self) -> SolverConfig:
        return SolverConfig(
            dt=self.dt,
            t_end=self.t_end,
            scheme=self.scheme,
            zk_enabled=self.zk,
            nonlinear_enabled=self.nonlinear,
            dealias=self.dealias,
            record_every=self.record_every,
        )

    def validate(self) -> "RunConfig":
        """Build every component object once so invalid combinations fail early."""
        grid = self.grid()
        self.initial_data()
        self.solver_config()
        if self.dealias and self.nonlinear and not grid.dealias_ok():
            raise ConfigurationError(
                f"grid_points {grid.grid_points} are below the 3/2 rule for modes {grid.modes}; "
                "raise grid_points or set dealias = false"
            )
        if self.c_s is not None and not (self.c_s > 0 and math.isfinite(self.c_s)):
            raise ConfigurationError("c_s must be positive")
        return self


@dataclass(frozen=True)
class SweepSpec:
    length_scale_range: tuple[float, float, int]
    amplitude_range: tuple[float, float, int]
    base: RunConfig

    def __post_init__(self):
        for name, (lo, hi, count) in (
            ("sweep.scale", self.length_scale_range),
            ("sweep.amplitude", self.amplitude_range),
        ):
            if count < 1:
                raise ConfigurationError(f"{name}: count must be >= 1")
            if lo > hi:
                raise ConfigurationError(f"{name}: min {lo} > max {hi}")

    @classmethod
    def from_config(cls, config: RunConfig) -> "SweepSpec":
        scale = config.sweep_scale or (1.0, 1.0, 1)
        amp = config.sweep_amplitude or (config.ic_amplitude, config.ic_amplitude, 1)
        return cls(scale, amp, config)

    def points(self) -> list[tuple[float, float]]:
        def values(lo, hi, count):
            if count == 1:
                return [float(lo)]
            return [lo + (hi - lo) * i / (count - 1) for i in range(count)]

        return sorted(
            (s, a) for s in values(*self.length_scale_range) for a in values(*self.amplitude_range)
        )


# key -> (field name, kind)
_KEYS = {
    "n": ("n", "int"),
    "lengths": ("lengths", "floats"),
    "modes": ("modes", "ints"),
    "grid_points": ("grid_points", "ints"),
    "dt": ("dt", "float"),
    "t_end": ("t_end", "float"),
    "scheme": ("scheme", "str"),
    "zk": ("zk", "bool"),
    "nonlinear": ("nonlinear", "bool"),
    "dealias": ("dealias", "bool"),
    "record_every": ("record_every", "int"),
    "ic.kind": ("ic_kind", "str"),
    "ic.amplitude": ("ic_amplitude", "float"),
    "ic.mode": ("ic_mode", "ints"),
    "seed": ("seed", "int"),
    "c_s": ("c_s", "float"),
    "output_path": ("output_path", "str"),
    "sweep.scale": ("sweep_scale", "range"),
    "sweep.amplitude": ("sweep_amplitude", "range"),
}
_REQUIRED = ("n", "lengths")
_TRUE = {"true", "yes", "on", "1"}
_FALSE = {"false", "no", "off", "0"}


def _convert(key: str, kind: str, raw: str):
    raw = raw.strip()
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            value = float(raw)
            if not math.isfinite(value):
                raise ValueError("not finite")
            return value
        if kind == "str":
            if not raw:
                raise ValueError("empty")
            return raw
        if kind == "bool":
            low = raw.lower()
            if low in _TRUE:
                return True
            if low in _FALSE:
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        parts = [p.strip() for p in raw.split(",") if p.strip()]
        if not parts:
            raise ValueError("empty list")
        if kind == "ints":
            return tuple(int(p) for p in parts)
        if kind == "floats":
            return tuple(float(p) for p in parts)
        if kind == "range":
            if len(parts) != 3:
                raise ValueError("expected min, max, count")
            return (float(parts[0]), float(parts[1]), int(parts[2]))
    except ValueError as exc:
        raise ConfigurationError(f"bad value for {key}: {raw!r} ({exc})") from None
    raise AssertionError(kind)


def _parse_pairs(lines: Iterable[str], source: str = "<config>") -> dict:
    values = {}
    for lineno, line in enumerate(lines, 1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        if "=" not in text:
            raise ConfigurationError(f"{source}:{lineno}: expected 'key = value', got {line.strip()!r}")
        key, raw = (s.strip() for s in text.split("=", 1))
        if key not in _KEYS:
            raise ConfigurationError(f"{source}:{lineno}: unknown key {key!r}")
        name, kind = _KEYS[key]
        values[name] = _convert(key, kind, raw)
    return values


def _build(values: dict) -> RunConfig:
    for key in _REQUIRED:
        if key not in values:
            raise ConfigurationError(f"missing required key {key!r}")
    n = values["n"]
    for name in ("modes", "grid_points"):
        if name in values and len(values[name]) == 1:
            values[name] = values[name] * n
    values.setdefault("modes", (16,) * n)
    for name in ("lengths", "modes", "grid_points", "ic_mode"):
        if values.get(name) is not None and len(values[name]) != n:
            raise ConfigurationError(f"{name} needs {n} entries, got {len(values[name])}")
    if values.get("scheme", "cnab2") not in SCHEMES:
        raise ConfigurationError(f"scheme must be one of {SCHEMES}")
    if values.get("ic_kind", "potential_bump") not in IC_KINDS:
        raise ConfigurationError(f"ic.kind must be one of {IC_KINDS}")
    return RunConfig(**values).validate()


def parse_config(text: str, overrides: Iterable[str] = (), source: str = "<config>") -> RunConfig:
    values = _parse_pairs(text.splitlines(), source)
    values.update(_parse_pairs(overrides, "--override"))
    return _build(values)


def load_config(path: str, overrides: Iterable[str] = ()) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, overrides, source=path)


def apply_overrides(config: RunConfig, overrides: Iterable[str]) -> RunConfig:
    values = {f.name: getattr(config, f.name) for f in fields(config) if getattr(config, f.name) is not None}
    values.update(_parse_pairs(overrides, "--override"))
    return _build(values)


def _format(kind: str, value) -> str:
    if kind == "bool":
        return "true" if value else "false"
    if kind == "float":
        return repr(float(value))
    if kind in ("ints", "floats"):
        return ", ".join(repr(v) for v in value)
    if kind == "range":
        return f"{float(value[0])!r}, {float(value[1])!r}, {int(value[2])}"
    return str(value)


def serialize_config(config: RunConfig) -> str:
    lines = []
    for key, (name, kind) in _KEYS.items():
        value = getattr(config, name)
        if value is None:
            continue
        lines.append(f"{key} = {_format(kind, value)}")
    return "\n".join(lines) + "\n"


def with_point(config: RunConfig, scale: float, amplitude: float) -> RunConfig:
    """Sweep point: side lengths scaled by ``scale`` and the given amplitude."""
    return replace(
        config,
        lengths=tuple(scale * L for L in config.lengths),
        ic_amplitude=amplitude,
        sweep_scale=None,
        sweep_amplitude=None,
    )
