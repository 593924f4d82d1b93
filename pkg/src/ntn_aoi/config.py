"""Experiment configuration: an INI file with [geometry], [link_budget], [model], [sweep], [sim], [output].

Angles are given in degrees here and converted to radians when the geometry
is built. Example::

    [geometry]
    altitude = 800
    angular_rate = 0.000872664625997165
    node_zenith_deg = 1.0
    density = 2e-05

    [model]
    update_rate = 1.0
    delay = 1.0

    [sweep]
    variable = update_rate
    grid = logspace 0.1 10 9
    densities = 2e-05, 5e-04

    [sim]
    n_arrivals = 1000000
    seed = 0
    engine = analytic

    [output]
    path = sweep.csv

``[link_budget]`` (tx_power, noise_power, snr_threshold, pathloss_exponent)
replaces ``node_zenith_deg``; giving both is an error. ``grid`` is either a
comma-separated list or ``logspace LO HI N``.
"""
from __future__ import annotations

import configparser
import io
import math
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .geometry import DEFAULT_ALTITUDE_KM, DEFAULT_ANGULAR_RATE, EARTH_RADIUS_KM, GeometryConfig, LinkBudget
from .errors import ParameterError

ENGINES = ("analytic", "renewal", "orbital", "all")
SWEEP_VARIABLES = ("update_rate", "density", "node_zenith")


class ConfigError(ParameterError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass(frozen=True)
class GeometrySection:
    earth_radius: float = EARTH_RADIUS_KM
    altitude: float = DEFAULT_ALTITUDE_KM
    angular_rate: float = DEFAULT_ANGULAR_RATE
    node_zenith_deg: float | None = 1.0
    density: float = 2e-5


@dataclass(frozen=True)
class BudgetSection:
    tx_power: float
    noise_power: float
    snr_threshold: float
    pathloss_exponent: float


@dataclass(frozen=True)
class ModelSection:
    update_rate: float = 1.0
    delay: float = 1.0


@dataclass(frozen=True)
class SweepSection:
    variable: str = "update_rate"
    grid: tuple[float, ...] = tuple(np.logspace(-1, 1, 9).tolist())
    densities: tuple[float, ...] = (2e-5, 5e-4)


@dataclass(frozen=True)
class SimSection:
    n_arrivals: int = 1_000_000
    seed: int = 0
    engine: str = "analytic"
    min_off_periods: int = 0
    n_cycles: int = 10_000


@dataclass(frozen=True)
class ExperimentConfig:
    geometry: GeometrySection = field(default_factory=GeometrySection)
    link_budget: BudgetSection | None = None
    model: ModelSection = field(default_factory=ModelSection)
    sweep: SweepSection = field(default_factory=SweepSection)
    sim: SimSection = field(default_factory=SimSection)
    output: str = "sweep.csv"

    def validate(self) -> "ExperimentConfig":
        g, s, sim = self.geometry, self.sweep, self.sim
        if (g.node_zenith_deg is None) == (self.link_budget is None):
            raise ConfigError("geometry.node_zenith_deg", "give exactly one of node_zenith_deg or [link_budget]")
        if g.node_zenith_deg is not None and not 0 < g.node_zenith_deg <= 90:
            raise ConfigError("geometry.node_zenith_deg", "must lie in (0, 90]")
        for name in ("earth_radius", "altitude", "angular_rate"):
            if not getattr(g, name) > 0:
                raise ConfigError(f"geometry.{name}", "must be positive")
        if not g.density >= 0:
            raise ConfigError("geometry.density", "must be non-negative")
        if not self.model.update_rate > 0:
            raise ConfigError("model.update_rate", "must be positive")
        if not self.model.delay >= 0:
            raise ConfigError("model.delay", "must be non-negative")
        if s.variable not in SWEEP_VARIABLES:
            raise ConfigError("sweep.variable", f"must be one of {', '.join(SWEEP_VARIABLES)}")
        for name in ("grid", "densities"):
            vals = getattr(s, name)
            if not vals:
                raise ConfigError(f"sweep.{name}", "must not be empty")
            if any(b <= a for a, b in zip(vals, vals[1:])):
                raise ConfigError(f"sweep.{name}", "must be strictly increasing")
        if sim.engine not in ENGINES:
            raise ConfigError("sim.engine", f"must be one of {', '.join(ENGINES)}")
        if sim.n_arrivals < 1000:
            raise ConfigError("sim.n_arrivals", "must be >= 1000")
        if sim.n_cycles < 1:
            raise ConfigError("sim.n_cycles", "must be >= 1")
        if sim.seed < 0 or sim.seed >= 2**64:
            raise ConfigError("sim.seed", "must be an unsigned 64-bit integer")
        return self

    def geometry_config(self, density: float | None = None, node_zenith_deg: float | None = None) -> GeometryConfig:
        g = self.geometry
        kw = dict(
            earth_radius=g.earth_radius,
            altitude=g.altitude,
            angular_rate=g.angular_rate,
            density=g.density if density is None else density,
        )
        if node_zenith_deg is not None:
            return GeometryConfig(node_zenith=math.radians(node_zenith_deg), **kw)
        if self.link_budget is not None:
            b = self.link_budget
            return GeometryConfig.from_budget(
                LinkBudget(b.tx_power, b.noise_power, b.snr_threshold, b.pathloss_exponent), **kw
            )
        return GeometryConfig(node_zenith=math.radians(g.node_zenith_deg), **kw)

    def with_overrides(self, **flags) -> "ExperimentConfig":
        """Apply CLI flags (seed, n_arrivals, engine, min_off_periods, n_cycles, output); None means unset."""
        sim_kw = {k: v for k, v in flags.items() if k in {f.name for f in fields(SimSection)} and v is not None}
        out = replace(self, sim=replace(self.sim, **sim_kw))
        if flags.get("output") is not None:
            out = replace(out, output=flags["output"])
        return out.validate()


def _floats(path: str, text: str) -> tuple[float, ...]:
    text = text.strip()
    try:
        if text.startswith("logspace"):
            lo, hi, n = text.split()[1:]
            return tuple(np.logspace(math.log10(float(lo)), math.log10(float(hi)), int(n)).tolist())
        return tuple(float(x) for x in text.replace(",", " ").split())
    except ValueError as exc:
        raise ConfigError(path, f"cannot parse number list {text!r}") from exc


def _typed(path: str, raw: str, kind):
    try:
        if kind is int:
            return int(raw, 0)
        if kind is float:
            return float(raw)
        return raw.strip()
    except ValueError as exc:
        raise ConfigError(path, f"expected {kind.__name__}, got {raw!r}") from exc


_KINDS = {
    "geometry": {"earth_radius": float, "altitude": float, "angular_rate": float,
                 "node_zenith_deg": float, "density": float},
    "link_budget": {"tx_power": float, "noise_power": float, "snr_threshold": float,
                    "pathloss_exponent": float},
    "model": {"update_rate": float, "delay": float},
    "sweep": {"variable": str, "grid": tuple, "densities": tuple},
    "sim": {"n_arrivals": int, "seed": int, "engine": str, "min_off_periods": int, "n_cycles": int},
    "output": {"path": str},
}


def parse_config(text: str) -> ExperimentConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError("<file>", str(exc)) from exc
    values: dict[str, dict] = {}
    for section in cp.sections():
        if section not in _KINDS:
            raise ConfigError(section, "unknown section")
        values[section] = {}
        for key, raw in cp.items(section):
            path = f"{section}.{key}"
            if key not in _KINDS[section]:
                raise ConfigError(path, "unknown key")
            kind = _KINDS[section][key]
            values[section][key] = _floats(path, raw) if kind is tuple else _typed(path, raw, kind)
    geo = values.get("geometry", {})
    budget = values.get("link_budget")
    if budget is not None:
        missing = set(_KINDS["link_budget"]) - set(budget)
        if missing:
            raise ConfigError(f"link_budget.{sorted(missing)[0]}", "missing")
        geo.setdefault("node_zenith_deg", None)
    cfg = ExperimentConfig(
        geometry=GeometrySection(**geo),
        link_budget=BudgetSection(**budget) if budget is not None else None,
        model=ModelSection(**values.get("model", {})),
        sweep=SweepSection(**values.get("sweep", {})),
        sim=SimSection(**values.get("sim", {})),
        output=values.get("output", {}).get("path", "sweep.csv"),
    )
    return cfg.validate()


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def dump_config(cfg: ExperimentConfig) -> str:
    cp = configparser.ConfigParser()
    geo = {k: repr(v) for k, v in vars(cfg.geometry).items() if v is not None}
    cp["geometry"] = geo
    if cfg.link_budget is not None:
        cp["link_budget"] = {k: repr(v) for k, v in vars(cfg.link_budget).items()}
    cp["model"] = {k: repr(v) for k, v in vars(cfg.model).items()}
    cp["sweep"] = {
        "variable": cfg.sweep.variable,
        "grid": ", ".join(repr(x) for x in cfg.sweep.grid),
        "densities": ", ".join(repr(x) for x in cfg.sweep.densities),
    }
    cp["sim"] = {k: str(v) for k, v in vars(cfg.sim).items()}
    cp["output"] = {"path": cfg.output}
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()
