"""Geometric simulation of dome coverage by a Poisson constellation.

In the frame co-moving with the satellites the constellation is frozen and
the source node travels along the equator of the orbital sphere at angular
rate omega. After each full revolution the constellation is redrawn.

Only satellites in the zone |latitude| <= earth_zenith can ever enter the
dome during a revolution, so only that zone is sampled (restricting a PPP to
a subset is again a PPP with the same intensity). A satellite at latitude
theta and longitude psi covers the node while its central angle to the node
is at most earth_zenith, i.e. for node longitudes psi +/- delta with
sin(delta) = sqrt(sin^2(earth_zenith) - sin^2(theta)) / cos(theta).
Coverage intervals are merged by union, so connectivity (not satellite
identity) defines the on periods.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import geometry
from .aoi_analysis import UpdateModel
from .errors import ParameterError
from .renewal_sim import ARRIVAL_STREAM, AoiEstimate, PeriodTrace, rng_stream, simulate_aoi

CYCLE_STREAM = 0
CYCLE_BLOCK = 64


@dataclass(frozen=True)
class Constellation:
    """Satellites of one revolution as unit vectors; ``latitude``/``longitude`` in rad."""

    latitude: np.ndarray
    longitude: np.ndarray

    @property
    def unit_vectors(self) -> np.ndarray:
        c = np.cos(self.latitude)
        return np.column_stack((c * np.cos(self.longitude), c * np.sin(self.longitude), np.sin(self.latitude)))


@dataclass(frozen=True)
class CycleConfig:
    angular_rate: float
    earth_zenith: float
    density: float
    orbit_radius: float
    regenerate: bool = True

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.angular_rate

    @property
    def band_mean(self) -> float:
        return self.density * 4.0 * math.pi * self.orbit_radius**2 * math.sin(self.earth_zenith)

    @classmethod
    def from_geometry(cls, cfg: geometry.GeometryConfig, dome: geometry.DomeSpec) -> "CycleConfig":
        if not 0 < dome.earth_zenith < math.pi / 2:
            raise ParameterError("earth_zenith must lie in (0, pi/2)")
        return cls(cfg.angular_rate, dome.earth_zenith, cfg.density, cfg.orbit_radius)


def sample_band(cycle: CycleConfig, rng: np.random.Generator) -> Constellation:
    """Homogeneous PPP on the orbital sphere restricted to |latitude| <= earth_zenith."""
    n = rng.poisson(cycle.band_mean)
    lon = rng.uniform(0.0, 2.0 * math.pi, n)
    s = math.sin(cycle.earth_zenith)
    # uniform area on the sphere <=> sin(latitude) uniform
    lat = np.arcsin(rng.uniform(-s, s, n))
    return Constellation(latitude=lat, longitude=lon)


def coverage_half_angle(earth_zenith: float, latitude) -> np.ndarray:
    """Half of the node-longitude range over which a satellite at ``latitude`` covers the node."""
    lat = np.asarray(latitude, dtype=float)
    gap = math.sin(earth_zenith) ** 2 - np.sin(lat) ** 2
    return np.arcsin(np.minimum(np.sqrt(np.maximum(gap, 0.0)) / np.cos(lat), 1.0))


def cycle_intervals(cycle: CycleConfig, sats: Constellation, t0: float, t1: float):
    """Coverage pieces of one revolution in absolute time, clipped to [t0, t1].

    A satellite whose interval wraps past longitude 0 contributes two pieces,
    one at each end of the revolution. Returns (starts, ends, chord_durations).
    """
    w = cycle.angular_rate
    period = t1 - t0
    delta = coverage_half_angle(cycle.earth_zenith, sats.latitude)
    keep = delta > 0
    lo = (sats.longitude[keep] - delta[keep]) / w
    hi = (sats.longitude[keep] + delta[keep]) / w
    chords = 2.0 * delta[keep] / w
    starts, ends = [], []
    inner = (lo >= 0) & (hi <= period)
    starts.append(t0 + lo[inner])
    ends.append(t0 + hi[inner])
    left = lo < 0
    starts += [np.full(left.sum(), t0), t0 + period + lo[left]]
    ends += [t0 + hi[left], np.full(left.sum(), t1)]
    right = hi > period
    starts += [t0 + lo[right], np.full(right.sum(), t0)]
    ends += [np.full(right.sum(), t1), t0 + hi[right] - period]
    return np.concatenate(starts), np.concatenate(ends), chords


def merge_intervals(starts, ends):
    """Union of closed intervals; returns (starts, ends, pieces per merged interval)."""
    s = np.asarray(starts, dtype=float)
    e = np.asarray(ends, dtype=float)
    if s.size == 0:
        return s, e, np.zeros(0, dtype=np.int64)
    order = np.argsort(s, kind="stable")
    s, e = s[order], e[order]
    reach = np.maximum.accumulate(e)
    new = np.ones(s.size, dtype=bool)
    new[1:] = s[1:] > reach[:-1]
    first = np.flatnonzero(new)
    last = np.append(first[1:] - 1, s.size - 1)
    return s[first], reach[last], np.diff(np.append(first, s.size))


@dataclass(frozen=True)
class ConnectivityTrace:
    """Period trace of the geometric model plus per-revolution diagnostics.

    The last period of ``trace`` is cut by the end of the final revolution
    and should be left out of duration statistics.
    """

    trace: PeriodTrace
    chord_durations: np.ndarray
    band_counts: np.ndarray
    merged_counts: np.ndarray  # satellite pieces per on period of ``trace``
    horizon: float
    starved: bool

    @property
    def complete_off_durations(self) -> np.ndarray:
        d = self.trace.durations
        n = d.size - 1  # drop the censored last period
        off = d[0:n:2]
        # a zero-length leading off period is an artifact of starting covered
        return off[1:] if off.size and d[0] == 0 else off

    @property
    def complete_on_durations(self) -> np.ndarray:
        d = self.trace.durations
        return d[1 : d.size - 1 : 2]

    @property
    def lag1_correlation(self) -> dict[str, float]:
        out = {}
        for name, x in (("off", self.complete_off_durations), ("on", self.complete_on_durations)):
            out[name] = float(np.corrcoef(x[:-1], x[1:])[0, 1]) if x.size > 2 else math.nan
        return out


def _build_trace(starts, ends, horizon: float) -> tuple[PeriodTrace, np.ndarray]:
    s, e, counts = merge_intervals(starts, ends)
    if s.size == 0:
        return PeriodTrace(np.array([horizon])), counts
    d = np.empty(2 * s.size + 1)
    d[0] = s[0]
    d[1:-1:2] = e - s
    d[2:-1:2] = s[1:] - e[:-1]
    d[-1] = horizon - e[-1]
    if d[-1] <= 0:
        d = d[:-1]
    return PeriodTrace(d), counts


class OrbitalSource:
    """Revolution-by-revolution coverage trace, extended on demand.

    Revolution ``c`` draws its constellation from its own generator
    (stream (0, c) of ``seed``), so traces do not depend on how far or in
    what steps they were extended.
    """

    def __init__(self, cycle: CycleConfig, seed: int):
        self.cycle = cycle
        self.seed = seed
        self.n_cycles = 0
        self._starts: list[np.ndarray] = []
        self._ends: list[np.ndarray] = []
        self._chords: list[np.ndarray] = []
        self._counts: list[int] = []
        self._trace: PeriodTrace | None = None
        self._merged: np.ndarray | None = None

    @property
    def horizon(self) -> float:
        return self.n_cycles * self.cycle.period

    def add_cycles(self, k: int) -> None:
        period = self.cycle.period
        for c in range(self.n_cycles, self.n_cycles + k):
            # without regeneration every revolution replays the first constellation
            key = c if self.cycle.regenerate else 0
            sats = sample_band(self.cycle, rng_stream(self.seed, CYCLE_STREAM, key))
            s, e, ch = cycle_intervals(self.cycle, sats, c * period, (c + 1) * period)
            self._starts.append(s)
            self._ends.append(e)
            self._chords.append(ch)
            self._counts.append(sats.latitude.size)
        self.n_cycles += k
        self._trace = None

    def cover(self, t: float) -> None:
        if self.horizon > t:
            return
        need = math.floor(t / self.cycle.period) + 1 - self.n_cycles
        self.add_cycles(max(need, CYCLE_BLOCK))

    @property
    def trace(self) -> PeriodTrace:
        if self._trace is None:
            self._trace, self._merged = _build_trace(
                np.concatenate(self._starts), np.concatenate(self._ends), self.horizon
            )
        return self._trace

    def connectivity(self) -> ConnectivityTrace:
        trace = self.trace
        return ConnectivityTrace(
            trace=trace,
            chord_durations=np.concatenate(self._chords),
            band_counts=np.asarray(self._counts, dtype=np.int64),
            merged_counts=self._merged,
            horizon=self.horizon,
            starved=self._merged.size == 0,
        )


def simulate_connectivity(cfg: geometry.GeometryConfig, dome: geometry.DomeSpec, n_cycles: int,
                          seed: int) -> ConnectivityTrace:
    """Alternating on/off trace over ``n_cycles`` revolutions with exact period endpoints.

    When no satellite ever enters the band the trace is a single off period
    spanning the horizon and ``starved`` is set.
    """
    if n_cycles < 1:
        raise ParameterError("n_cycles must be >= 1")
    src = OrbitalSource(CycleConfig.from_geometry(cfg, dome), seed)
    src.add_cycles(n_cycles)
    return src.connectivity()


def run_geo_aoi(cfg: geometry.GeometryConfig, dome: geometry.DomeSpec, model: UpdateModel,
                n_arrivals: int, seed: int) -> AoiEstimate:
    src = OrbitalSource(CycleConfig.from_geometry(cfg, dome), seed)
    return simulate_aoi(src, model, n_arrivals, rng_stream(seed, ARRIVAL_STREAM))
