"""Experiment configuration and its INI-style file format.

A config file holds one section per sweep; ``[DEFAULT]`` values apply to
every section. Lists are comma separated::

    [DEFAULT]
    n = 4000
    mu = 1e-4

    [gaussian]
    kernel = gaussian
    params = 1000, 65, 25, 0.1
    methods = cg, adaptive, ran, fsai
    output = gaussian.csv
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields, replace

from ..errors import ArgumentError
from ..kernel import KernelFamily, KernelSpec
from ..precond import AFN_FSAI_NEIGHBORS, FSAI_NEIGHBORS, LANDMARK_CAP, RAN_RANK

METHODS = ("cg", "adaptive", "afn", "nystrom", "ran", "fsai")
SOURCES = ("synthetic", "csv", "sparse")


class ConfigError(ArgumentError):
    """Invalid experiment configuration."""


def kernel_from_param(family, param, mu=0.0, imq_p=1.0):
    """Kernel for one grid value.

    Grid values are read per family the way the result tables label them:
    ``l^2`` for Gaussian, ``1/l`` for Matern-3/2 and ``c`` for the inverse
    multiquadric.
    """
    family = KernelFamily.parse(family) if not isinstance(family, KernelFamily) else family
    if not param > 0 and family is not KernelFamily.INVERSE_MULTIQUADRIC:
        raise ArgumentError(f"kernel parameter must be positive, got {param}")
    if family is KernelFamily.GAUSSIAN:
        return KernelSpec.gaussian(param, mu)
    if family is KernelFamily.MATERN32:
        return KernelSpec.matern32(1.0 / param, mu)
    return KernelSpec.imq(param, imq_p, mu)


@dataclass
class ExperimentConfig:
    name: str = "sweep"
    source: str = "synthetic"
    path: str | None = None
    dim: int | None = None
    n: int = 1000
    d: int = 3
    edge: float | None = None
    data_seed: int = 0
    kernel: str = "gaussian"
    params: list = field(default_factory=lambda: [1.0])
    mu: list = field(default_factory=lambda: [1e-4])
    imq_p: float = 1.0
    methods: list = field(default_factory=lambda: ["cg", "adaptive"])
    tol: float = 1e-4
    maxit: int = 500
    seeds: list = field(default_factory=lambda: [0, 1, 2])
    afn_w: int = AFN_FSAI_NEIGHBORS
    fsai_w: int = FSAI_NEIGHBORS
    ran_rank: int = RAN_RANK
    landmark_cap: int = LANDMARK_CAP
    threshold: int = 2000
    subsample: int | None = None
    record_timings: bool = True
    n_max: int = 20000
    output: str | None = None
    format: str = "csv"

    def __post_init__(self):
        self.validate()

    @property
    def family(self):
        return KernelFamily.parse(self.kernel)

    def validate(self):
        if self.source not in SOURCES:
            raise ConfigError(f"source must be one of {SOURCES}, got {self.source!r}")
        if self.source != "synthetic" and not self.path:
            raise ConfigError(f"source {self.source!r} needs a path")
        if not self.params or not self.mu or not self.methods or not self.seeds:
            raise ConfigError("params, mu, methods and seeds must be non-empty")
        if not 0 < self.tol < 1:
            raise ConfigError(f"tol must lie in (0, 1), got {self.tol}")
        if self.maxit < 1:
            raise ConfigError(f"maxit must be positive, got {self.maxit}")
        if self.n < 1 or self.d < 1:
            raise ConfigError("n and d must be positive")
        if self.edge is not None and not self.edge > 0:
            raise ConfigError(f"edge must be positive, got {self.edge}")
        if any(m < 0 for m in self.mu):
            raise ConfigError("mu values must be non-negative")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ConfigError(f"unknown methods {bad}; choose from {METHODS}")
        if self.format not in ("csv", "json"):
            raise ConfigError(f"format must be csv or json, got {self.format!r}")
        try:
            KernelFamily.parse(self.kernel)
        except ArgumentError as exc:
            raise ConfigError(str(exc)) from None

    def with_overrides(self, **kwargs):
        return replace(self, **{k: v for k, v in kwargs.items() if v is not None})


def _split(text, conv):
    return [conv(tok.strip()) for tok in str(text).split(",") if tok.strip()]


def _bool(text):
    val = str(text).strip().lower()
    if val in ("1", "true", "yes", "on"):
        return True
    if val in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _optional(conv):
    def parse(text):
        text = str(text).strip()
        return None if text.lower() in ("", "auto", "none") else conv(text)
    return parse


_CONVERTERS = {
    "params": lambda t: _split(t, float),
    "mu": lambda t: _split(t, float),
    "seeds": lambda t: _split(t, int),
    "methods": lambda t: _split(t, lambda s: s.lower()),
    "n": int, "d": int, "data_seed": int, "maxit": int, "afn_w": int, "fsai_w": int,
    "ran_rank": int, "landmark_cap": int, "threshold": int, "n_max": int,
    "tol": float, "imq_p": float,
    "edge": _optional(float), "dim": _optional(int), "subsample": _optional(int),
    "path": _optional(str), "output": _optional(str),
    "record_timings": _bool,
}
_KNOWN = {f.name for f in fields(ExperimentConfig)}


def config_from_mapping(name, mapping):
    """Build a config from string key/value pairs (e.g. one INI section)."""
    kwargs = {"name": name}
    for key, raw in mapping.items():
        key = key.strip().lower().replace("-", "_")
        if key not in _KNOWN or key == "name":
            raise ConfigError(f"[{name}] unknown key {key!r}")
        conv = _CONVERTERS.get(key, lambda t: str(t).strip())
        try:
            kwargs[key] = conv(raw)
        except ValueError as exc:
            raise ConfigError(f"[{name}] bad value for {key}: {exc}") from None
    return ExperimentConfig(**kwargs)


def load_config(path):
    """Parse a config file into one :class:`ExperimentConfig` per section."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    sections = parser.sections()
    if not sections:
        raise ConfigError(f"{path} defines no sweep sections")
    return [config_from_mapping(sec, dict(parser.items(sec))) for sec in sections]
