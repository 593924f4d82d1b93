"""On-off service process: exponential off periods, bounded on periods.

An on period is the time a single satellite spends inside the dome. Its
length is a deterministic function of the entry angle ``theta`` (offset of
the satellite track from the node path), which is uniform on
[-earth_zenith, earth_zenith]. Every functional of the on-period law is
integrated over that angle rather than over time, because the density in
time has an inverse square-root singularity at its right endpoint.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import geometry
from .errors import ParameterError
from .stats import quadrature

QUAD_ORDER = 64
# halvings of the distance to the grazing-entry end of [0, pi/2]; resolves
# exp(-mu W) for mu * max_service up to ~1e15
_GRADED_PANELS = 50


@dataclass(frozen=True)
class OnOffParams:
    off_rate: float
    earth_zenith: float
    angular_rate: float

    def __post_init__(self):
        if not (self.off_rate >= 0 and math.isfinite(self.off_rate)):
            raise ParameterError("off_rate must be finite and non-negative")
        if not 0 < self.earth_zenith < math.pi / 2:
            raise ParameterError("earth_zenith must lie in (0, pi/2)")
        if not self.angular_rate > 0:
            raise ParameterError("angular_rate must be positive")

    @classmethod
    def from_geometry(cls, cfg: geometry.GeometryConfig) -> "OnOffParams":
        d = geometry.dome(cfg)
        return cls(
            off_rate=geometry.off_rate(cfg, d.earth_zenith),
            earth_zenith=d.earth_zenith,
            angular_rate=cfg.angular_rate,
        )

    @property
    def max_service(self) -> float:
        """Longest possible on period, 2 * earth_zenith / angular_rate."""
        return 2.0 * self.earth_zenith / self.angular_rate


def service_time_from_entry(params: OnOffParams, theta):
    """Chord traversal time for a satellite whose track is offset by ``theta``."""
    th = np.asarray(theta, dtype=float)
    pe = params.earth_zenith
    if np.any(np.abs(th) > pe * (1 + 1e-12)):
        raise ParameterError("entry angle outside [-earth_zenith, earth_zenith]")
    s2 = math.sin(pe) ** 2 - np.sin(th) ** 2
    arg = np.sqrt(np.maximum(s2, 0.0)) / np.cos(th)
    w = (2.0 / params.angular_rate) * np.arcsin(np.minimum(arg, 1.0))
    return float(w) if w.ndim == 0 else w


def entry_from_service_time(params: OnOffParams, s):
    """Non-negative entry angle giving service time ``s`` (inverse of the chord map)."""
    u = 0.5 * params.angular_rate * np.asarray(s, dtype=float)
    s2 = math.sin(params.earth_zenith) ** 2 - np.sin(u) ** 2
    return np.arcsin(np.sqrt(np.maximum(s2, 0.0)) / np.cos(u))


def service_pdf(params: OnOffParams, s):
    """Density of the on-period length.

    Zero outside [0, max_service); +inf exactly at the singular right endpoint.
    """
    s = np.asarray(s, dtype=float)
    w = params.angular_rate
    pe = params.earth_zenith
    out = np.zeros_like(s)
    inside = (s >= 0) & (s <= params.max_service)
    u = 0.5 * w * s[inside]
    gap = math.sin(pe) ** 2 - np.sin(u) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        val = w * math.cos(pe) * np.tan(u) / (2.0 * pe * np.sqrt(gap))
    val[gap <= 0] = np.inf
    out[inside] = val
    return float(out) if out.ndim == 0 else out


def service_cdf(params: OnOffParams, s):
    """P(W <= s): the uniform measure of entry angles whose chord is at most ``s``."""
    s = np.asarray(s, dtype=float)
    clipped = np.clip(s, 0.0, params.max_service)
    f = 1.0 - entry_from_service_time(params, clipped) / params.earth_zenith
    f = np.where(s <= 0, 0.0, np.where(s >= params.max_service, 1.0, f))
    return float(f) if f.ndim == 0 else f


def sample_service_time(params: OnOffParams, rng: np.random.Generator, size=None):
    theta = rng.uniform(-params.earth_zenith, params.earth_zenith, size)
    return service_time_from_entry(params, theta)


def sample_off_time(params: OnOffParams, rng: np.random.Generator, size=None):
    if params.off_rate == 0:
        return np.full(size, np.inf) if size is not None else math.inf
    return rng.exponential(1.0 / params.off_rate, size)


def expect_over_entry(params: OnOffParams, g: Callable, order: int = QUAD_ORDER) -> tuple[float, float]:
    """E[g(W)] with theta uniform, returned as (value, error estimate).

    Substituting sin(theta) = sin(phi_e) sin(v) removes the square-root
    behaviour of W at the grazing ends, leaving an analytic integrand on
    v in [0, pi/2] (the integrand is even in theta). Panels are graded towards
    v = pi/2, where W -> 0 and exp(-mu W) varies fastest.
    """
    pe = params.earth_zenith
    sin_pe = math.sin(pe)
    two_over_w = 2.0 / params.angular_rate

    def integrand(v):
        sin_th = sin_pe * np.sin(v)
        cos_th = np.sqrt(1.0 - sin_th * sin_th)
        w = two_over_w * np.arcsin(np.minimum(sin_pe * np.cos(v) / cos_th, 1.0))
        return g(w) * sin_pe * np.cos(v) / cos_th

    half_pi = 0.5 * math.pi
    edges = [half_pi - half_pi * 0.5**j for j in range(_GRADED_PANELS + 1)] + [half_pi]
    total = 0.0
    err = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, e = quadrature(integrand, lo, hi, order)
        total += val
        err += e
    return total / pe, err / pe


def mean_service_time(params: OnOffParams, order: int = QUAD_ORDER) -> float:
    return expect_over_entry(params, lambda w: w, order)[0]


def service_laplace(params: OnOffParams, mu: float, order: int = QUAD_ORDER) -> float:
    """E[exp(-mu W)]; exactly 1 at mu = 0."""
    if mu < 0:
        raise ParameterError("mu must be non-negative")
    if mu == 0:
        return 1.0
    return expect_over_entry(params, lambda w: np.exp(-mu * w), order)[0]


def service_laplace_complement(params: OnOffParams, mu: float, order: int = QUAD_ORDER) -> float:
    """1 - E[exp(-mu W)] without cancellation for small mu."""
    if mu < 0:
        raise ParameterError("mu must be non-negative")
    if mu == 0:
        return 0.0
    return expect_over_entry(params, lambda w: -np.expm1(-mu * w), order)[0]
