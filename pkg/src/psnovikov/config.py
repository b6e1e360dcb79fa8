"""Run configuration: flat ``key = value`` files with ``#`` comments.

Parsing is strict. Unknown keys, malformed values and repeated keys are
errors that name the key and the line. ``serialize`` writes every key in a
fixed order, so ``serialize(parse_config(p))`` is the normal form of ``p``.
"""
from __future__ import annotations

import difflib
import math
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .evolution import StepConfig
from .geometry import PSSParams
from .norms import GevreyParams, KMParams
from .spectral import GridSpec


class ConfigError(ValueError):
    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        where = f"line {line}: " if line is not None else ""
        super().__init__(where + message)
        self.key = key
        self.line = line


INITIAL_KINDS = ("sech", "gaussian_momentum", "mode_perturbation", "from_file")


@dataclass(frozen=True)
class RunConfig:
    L: float = 40.0
    N: int = 1024
    initial: str = "sech"
    init_a: float = 1.0
    init_w: float = 1.0
    init_eps: float = 0.0
    init_mode: int = 1
    init_path: str = ""
    dt: float = 1e-3
    t_end: float = 1.0
    sample_times: tuple[float, ...] = ()
    resolution_guard: float = 1e-10
    cfl_guard: float = 0.5
    ux_ceiling: float = 1e3
    positivity_tol: float = 1e-8
    s: float = 2.0
    gevrey_sigma: float = 1.0
    km_sigma: float = -0.5
    km_m: int = 12
    mu_metric: float = 0.0
    m1: int = -2
    sign: int = 1
    sigma0: float = -0.1
    mu_bound: float | None = None      # None: 1 + max ||u||_{H^2} over the run
    c_s: float | None = None           # None: measured on the seeded corpus
    R: float | None = None             # None: ||u0||_{G^{1,s}}
    u0_gnorm: float | None = None      # None: computed from the initial data
    taylor_K: int = 20
    geometry_t_end: float = 0.2
    geometry_stride: int = 1
    genericity_threshold: float = 1e-6
    corpus_size: int = 500
    seed: int = 0
    out_dir: str = "out"

    def __post_init__(self):
        if self.initial not in INITIAL_KINDS:
            raise ConfigError(f"initial must be one of {INITIAL_KINDS}, got {self.initial!r}", "initial")
        if any(not 0 <= t <= self.t_end + 1e-12 for t in self.sample_times):
            raise ConfigError("sample_times must lie in [0, t_end]", "sample_times")
        if any(b <= a for a, b in zip(self.sample_times, self.sample_times[1:])):
            raise ConfigError("sample_times must be strictly increasing", "sample_times")
        if self.m1 not in (-2, 1):
            raise ConfigError(f"m1 must be -2 or 1, got {self.m1}", "m1")
        if self.sign not in (-1, 1):
            raise ConfigError(f"sign must be +1 or -1, got {self.sign}", "sign")
        if not self.sigma0 < 0:
            raise ConfigError(f"sigma0 must be negative, got {self.sigma0}", "sigma0")
        if self.geometry_stride < 1:
            raise ConfigError("geometry_stride must be >= 1", "geometry_stride")
        for name in ("dt", "L"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive", name)
        if self.N < 8 or self.N % 2:
            raise ConfigError(f"N must be even and >= 8, got {self.N}", "N")

    # -- derived objects -------------------------------------------------------------
    @property
    def grid(self) -> GridSpec:
        return GridSpec(self.L, self.N)

    @property
    def step(self) -> StepConfig:
        return StepConfig(dt=self.dt, t_end=self.t_end, resolution_guard=self.resolution_guard,
                          cfl_guard=self.cfl_guard, ux_ceiling=self.ux_ceiling,
                          positivity_tol=self.positivity_tol, s=self.s)

    @property
    def gevrey(self) -> GevreyParams:
        return GevreyParams(self.gevrey_sigma, self.s)

    @property
    def km(self) -> KMParams:
        return KMParams(self.km_sigma, self.km_m)

    @property
    def pss(self) -> PSSParams:
        return PSSParams(self.mu_metric, self.m1, self.sign)

    def as_dict(self) -> dict:
        return {f.name: (list(v) if isinstance(v := getattr(self, f.name), tuple) else v)
                for f in fields(self)}


# sentinel spellings for optional numbers
_AUTO = {"mu_bound": "auto", "c_s": "measured", "R": "auto", "u0_gnorm": "auto"}
_KEYS = [f.name for f in fields(RunConfig)]


def _parse_value(key: str, raw: str, line: int | None):
    ftype = {f.name: f.type for f in fields(RunConfig)}[key]
    try:
        if key in _AUTO:
            return None if raw == _AUTO[key] else _finite(float(raw))
        if key == "sample_times":
            return tuple(_finite(float(v)) for v in raw.split(",") if v.strip()) if raw else ()
        if ftype == "int":
            return int(raw)
        if ftype == "float":
            return _finite(float(raw))
        return raw
    except ValueError as exc:
        hint = f" (or {_AUTO[key]!r})" if key in _AUTO else ""
        raise ConfigError(f"bad value for {key!r}: {raw!r} is not a valid {ftype}{hint}",
                          key, line) from exc


def _finite(v: float) -> float:
    if not math.isfinite(v):
        raise ValueError("non-finite")
    return v


def _unknown(key: str, line: int | None) -> ConfigError:
    close = difflib.get_close_matches(key, _KEYS, n=1, cutoff=0.5)
    hint = f"; did you mean {close[0]!r}?" if close else ""
    return ConfigError(f"unknown key {key!r}{hint}", key, line)


def parse_text(text: str) -> RunConfig:
    values = {}
    seen = {}
    for n, raw_line in enumerate(text.splitlines(), start=1):
        body = raw_line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"expected 'key = value', got {body!r}", None, n)
        key, raw = (part.strip() for part in body.split("=", 1))
        if key not in _KEYS:
            raise _unknown(key, n)
        if key in seen:
            raise ConfigError(f"key {key!r} repeated (first on line {seen[key]})", key, n)
        seen[key] = n
        values[key] = _parse_value(key, raw, n)
    try:
        return RunConfig(**values)
    except ConfigError as exc:
        raise ConfigError(str(exc), exc.key, seen.get(exc.key)) from None


def parse_config(path) -> RunConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file {str(p)!r} does not exist")
    return parse_text(p.read_text())


def _format(key: str, v) -> str:
    if v is None:
        return _AUTO[key]
    if isinstance(v, tuple):
        return ", ".join(repr(float(t)) for t in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def serialize(cfg: RunConfig) -> str:
    return "".join(f"{k} = {_format(k, getattr(cfg, k))}\n" for k in _KEYS)


def normalize(text: str) -> str:
    return serialize(parse_text(text))


def with_overrides(cfg: RunConfig, **kw) -> RunConfig:
    """Replace fields of ``cfg``; ``None`` selects the automatic value where one exists."""
    for k in kw:
        if k not in _KEYS:
            raise _unknown(k, None)
    return replace(cfg, **kw)
