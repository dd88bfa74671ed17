"""Flat ``key = value`` experiment configs.

One setting per line, ``#`` starts a comment, blank lines are ignored.
Lists are comma separated; bidisc caps may be written ``4x4`` or ``(4,4)``.
Complex points accept ``i`` or ``j`` for the imaginary unit (``0.6+0.8i``).
"""
from __future__ import annotations

import math
import re
from dataclasses import asdict, dataclass
from typing import Optional

from .errors import ConfigError
from .symbols import parse_expression

EXPERIMENTS = ("localize", "prop1", "analytic_disc", "extend", "hormander", "certify")
DOMAIN_KINDS = ("disc", "annulus", "bidisc")

_SPECTRAL = {"symbol", "degree_caps", "resolution", "threshold", "projection_extra"}
_VERDICT = {"plateau_floor", "slope_ceiling", "growth_tol"}
_PLANAR = {"domain", "radius", "inner_radius", "outer_radius"}
_LENS = {"lens_center", "lens_radius"}

_ALLOWED = {
    "localize": _PLANAR | _LENS | _SPECTRAL | _VERDICT,
    "prop1": _PLANAR | _SPECTRAL | _VERDICT | {"cross_check_count", "cauchy_resolution"},
    "analytic_disc": {"domain", "radius1", "radius2"} | _SPECTRAL | _VERDICT,
    "extend": {"domain", "radius"} | _LENS | {"function", "epsilon", "delta", "k_max",
                                              "k_values", "resolution"},
    "hormander": {"domain", "radius", "data", "weight", "weight_scales", "resolution"},
    "certify": (_PLANAR | {"radius1", "radius2"} | _SPECTRAL
                | {"epsilon", "gram_diagonal"}),
}
ALLOWED = {name: keys | {"experiment", "output"} for name, keys in _ALLOWED.items()}

DEFAULT_EPSILON = {"extend": 1e-3, "certify": 0.05}


@dataclass
class ExperimentConfig:
    experiment: str
    domain: str = "disc"
    radius: float = 1.0
    inner_radius: float = 0.5
    outer_radius: float = 1.0
    radius1: float = 1.0
    radius2: float = 1.0
    lens_center: complex = 1.0
    lens_radius: float = 0.7
    symbol: str = "conj(z)"
    degree_caps: tuple = (10, 20, 30)
    resolution: int = 128
    threshold: float = 1e-10
    projection_extra: Optional[int] = None
    plateau_floor: Optional[float] = None
    slope_ceiling: float = -0.5
    growth_tol: float = 0.02
    epsilon: Optional[float] = None
    delta: float = 0.2
    k_max: int = 64
    k_values: Optional[tuple] = None
    function: str = "z"
    data: str = "1"
    weight: str = "0"
    weight_scales: tuple = (1.0,)
    cross_check_count: int = 10
    cauchy_resolution: Optional[int] = None
    gram_diagonal: Optional[tuple] = None
    output: Optional[str] = None

    @property
    def dimension(self) -> int:
        return 2 if self.domain == "bidisc" else 1

    def resolved_epsilon(self) -> float:
        return self.epsilon if self.epsilon is not None else DEFAULT_EPSILON.get(self.experiment, 0.05)

    def echo(self) -> dict:
        out = {}
        for k, v in asdict(self).items():
            if isinstance(v, complex):
                v = [v.real, v.imag]
            elif isinstance(v, tuple):
                v = [list(x) if isinstance(x, tuple) else x for x in v]
            out[k] = v
        return out


# ---------------------------------------------------------------- value parsers

def _float(key, text):
    try:
        v = float(text)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {text!r}") from None
    if not math.isfinite(v):
        raise ConfigError(f"{key}: value must be finite")
    return v


def _int(key, text):
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {text!r}") from None


def _complex(key, text):
    t = text.replace(" ", "").replace("i", "j")
    try:
        return complex(t)
    except ValueError:
        raise ConfigError(f"{key}: expected a complex number, got {text!r}") from None


def _list(key, text, item):
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if not parts:
        raise ConfigError(f"{key}: empty list")
    return tuple(item(key, p) for p in parts)


def _caps(key, text):
    text = text.strip()
    if "(" in text:
        groups = re.findall(r"\(([^)]*)\)", text)
        return tuple(tuple(_int(key, x.strip()) for x in g.split(",")) for g in groups)
    out = []
    for part in re.split(r"[,\s]+", text):
        if not part:
            continue
        if "x" in part:
            out.append(tuple(_int(key, x) for x in part.split("x")))
        else:
            out.append(_int(key, part))
    if not out:
        raise ConfigError(f"{key}: empty list")
    return tuple(out)


def _text(key, text):
    return text.strip()


PARSERS = {
    "experiment": _text, "domain": _text, "symbol": _text, "function": _text,
    "data": _text, "weight": _text, "output": _text,
    "radius": _float, "inner_radius": _float, "outer_radius": _float,
    "radius1": _float, "radius2": _float, "lens_radius": _float,
    "lens_center": _complex,
    "degree_caps": _caps,
    "resolution": _int, "cauchy_resolution": _int, "projection_extra": _int,
    "threshold": _float, "plateau_floor": _float, "slope_ceiling": _float,
    "growth_tol": _float, "epsilon": _float, "delta": _float,
    "k_max": _int, "cross_check_count": _int,
    "k_values": lambda k, t: _list(k, t, _int),
    "weight_scales": lambda k, t: _list(k, t, _float),
    "gram_diagonal": lambda k, t: _list(k, t, _float),
}


def parse_config(text: str, experiment: Optional[str] = None) -> ExperimentConfig:
    """Parse and validate a config; ``experiment`` (from the command line) wins
    over a missing ``experiment`` key and must agree with a present one."""
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in PARSERS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = PARSERS[key](key, value)

    name = raw.get("experiment", experiment)
    if experiment is not None and name != experiment:
        raise ConfigError(f"experiment: config says {name!r} but {experiment!r} was requested")
    if name not in EXPERIMENTS:
        raise ConfigError(f"experiment: must be one of {', '.join(EXPERIMENTS)}, got {name!r}")
    for key in raw:
        if key not in ALLOWED[name]:
            raise ConfigError(f"{key}: not a setting of the {name} experiment")
    raw["experiment"] = name
    if name == "analytic_disc":
        raw.setdefault("domain", "bidisc")
        raw.setdefault("symbol", "conj(z1)")
        raw.setdefault("degree_caps", ((4, 4), (6, 6), (8, 8)))
        raw.setdefault("resolution", 32)
    cfg = ExperimentConfig(**raw)
    validate(cfg)
    return cfg


def load_config(path, experiment: Optional[str] = None) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, experiment)


def _positive(cfg, *keys):
    for key in keys:
        v = getattr(cfg, key)
        if v is not None and not v > 0:
            raise ConfigError(f"{key}: must be positive, got {v}")


def validate(cfg: ExperimentConfig) -> None:
    if cfg.domain not in DOMAIN_KINDS:
        raise ConfigError(f"domain: must be one of {', '.join(DOMAIN_KINDS)}, got {cfg.domain!r}")
    if cfg.experiment == "analytic_disc" and cfg.domain != "bidisc":
        raise ConfigError("domain: analytic_disc runs on the bidisc")
    if cfg.experiment in ("localize", "prop1", "extend", "hormander") and cfg.domain == "bidisc":
        raise ConfigError(f"domain: {cfg.experiment} needs a planar domain")
    if cfg.experiment in ("extend", "hormander") and cfg.domain != "disc":
        raise ConfigError(f"domain: {cfg.experiment} runs on a disc")
    _positive(cfg, "radius", "inner_radius", "outer_radius", "radius1", "radius2",
              "lens_radius", "epsilon", "delta", "k_max", "plateau_floor")
    if not 0 < cfg.inner_radius < cfg.outer_radius:
        raise ConfigError("inner_radius: need 0 < inner_radius < outer_radius")
    for key in ("resolution", "cauchy_resolution"):
        v = getattr(cfg, key)
        if v is not None and v < 8:
            raise ConfigError(f"{key}: must be at least 8, got {v}")
    if not 1e-14 <= cfg.threshold <= 1e-4:
        raise ConfigError(f"threshold: must lie in [1e-14, 1e-4], got {cfg.threshold}")
    if cfg.projection_extra is not None and cfg.projection_extra < 0:
        raise ConfigError("projection_extra: must be non-negative")
    if not cfg.slope_ceiling < 0:
        raise ConfigError(f"slope_ceiling: must be negative, got {cfg.slope_ceiling}")
    if cfg.growth_tol < 0:
        raise ConfigError("growth_tol: must be non-negative")
    if cfg.cross_check_count < 0:
        raise ConfigError("cross_check_count: must be non-negative")
    if cfg.delta >= cfg.lens_radius and cfg.experiment == "extend":
        raise ConfigError(f"delta: must be smaller than lens_radius {cfg.lens_radius}")
    if any(k < 0 for k in cfg.weight_scales):
        raise ConfigError("weight_scales: must be non-negative")
    if cfg.k_values is not None and (any(k < 0 for k in cfg.k_values)
                                     or list(cfg.k_values) != sorted(set(cfg.k_values))):
        raise ConfigError("k_values: must be non-negative and strictly increasing")
    if cfg.gram_diagonal is not None and any(v < 0 for v in cfg.gram_diagonal):
        raise ConfigError("gram_diagonal: entries must be non-negative")
    _validate_caps(cfg)
    dim = cfg.dimension
    for key in ("symbol", "function", "data", "weight"):
        if key in ALLOWED[cfg.experiment]:
            parse_expression(getattr(cfg, key), dim if key == "symbol" else 1)


def _validate_caps(cfg):
    caps = cfg.degree_caps
    dim = cfg.dimension
    for c in caps:
        if isinstance(c, tuple):
            if dim != 2 or len(c) != 2:
                raise ConfigError(f"degree_caps: {c} does not match a domain of dimension {dim}")
            if min(c) < 0:
                raise ConfigError("degree_caps: caps must be non-negative")
        elif c < 0:
            raise ConfigError("degree_caps: caps must be non-negative")
    keys = [sum(c) if isinstance(c, tuple) else c for c in caps]
    if any(b <= a for a, b in zip(keys, keys[1:])):
        raise ConfigError(f"degree_caps: must be strictly increasing, got {list(caps)}")
    if cfg.experiment in ("localize", "prop1", "analytic_disc") and len(caps) < 3:
        raise ConfigError("degree_caps: a truncation family needs at least 3 caps")
