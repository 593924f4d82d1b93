import math

import numpy as np
import pytest

from ntn_aoi import geometry
from ntn_aoi import orbital_sim as osim
from ntn_aoi.aoi_analysis import UpdateModel
from ntn_aoi.errors import ParameterError, StarvationError
from ntn_aoi.renewal_sim import rng_stream
from ntn_aoi.stats import ks_statistic

OMEGA = math.pi / 3600


def covered_brute_force(cycle, seed, times):
    """Coverage by direct dot products between the node and every satellite."""
    out = np.zeros(times.size, dtype=bool)
    cos_pe = math.cos(cycle.earth_zenith)
    for c in np.unique(np.floor(times / cycle.period).astype(int)):
        sats = osim.sample_band(cycle, rng_stream(seed, osim.CYCLE_STREAM, c)).unit_vectors
        idx = np.flatnonzero(np.floor(times / cycle.period).astype(int) == c)
        ang = cycle.angular_rate * times[idx]
        node = np.column_stack((np.cos(ang), np.sin(ang), np.zeros(idx.size)))
        out[idx] = (node @ sats.T >= cos_pe).any(axis=1)
    return out


class TestHalfAngle:
    def test_against_spherical_cosine_rule(self):
        pe = 0.1
        lat = np.linspace(-0.099, 0.099, 21)
        assert np.allclose(osim.coverage_half_angle(pe, lat), np.arccos(math.cos(pe) / np.cos(lat)), atol=1e-12)

    def test_outside_band_is_zero(self):
        assert osim.coverage_half_angle(0.1, 0.2) == 0.0


class TestIntervals:
    cycle = osim.CycleConfig(angular_rate=1.0, earth_zenith=0.1, density=1.0, orbit_radius=1.0)

    def test_wrapped_satellite_split(self):
        sats = osim.Constellation(latitude=np.array([0.0]), longitude=np.array([0.05]))
        s, e, chords = osim.cycle_intervals(self.cycle, sats, 0.0, 2 * math.pi)
        pieces = sorted(zip(s.tolist(), e.tolist()))
        assert pieces[0] == pytest.approx((0.0, 0.15))
        assert pieces[1] == pytest.approx((2 * math.pi - 0.05, 2 * math.pi))
        assert chords == pytest.approx([0.2])

    def test_merge(self):
        s, e, n = osim.merge_intervals([0, 1, 2.5, 5], [2, 3, 4, 6])
        assert s.tolist() == [0, 5] and e.tolist() == [4, 6] and n.tolist() == [3, 1]

    def test_merge_empty(self):
        s, e, n = osim.merge_intervals([], [])
        assert s.size == e.size == n.size == 0


class TestSource:
    cycle = osim.CycleConfig(angular_rate=OMEGA, earth_zenith=0.02, density=2e-5, orbit_radius=7171.0)

    def test_trace_matches_brute_force(self):
        src = osim.OrbitalSource(self.cycle, seed=21)
        src.add_cycles(4)
        t = np.random.default_rng(0).uniform(0, src.horizon, 20_000)
        assert np.array_equal(src.trace.is_on(t), covered_brute_force(self.cycle, 21, t))

    def test_extension_invariance(self):
        a = osim.OrbitalSource(self.cycle, seed=5)
        a.add_cycles(10)
        b = osim.OrbitalSource(self.cycle, seed=5)
        b.add_cycles(4)
        b.add_cycles(6)
        assert np.array_equal(a.trace.durations, b.trace.durations)

    def test_cover_extends_in_blocks(self):
        src = osim.OrbitalSource(self.cycle, seed=5)
        src.cover(2.5 * self.cycle.period)
        assert src.n_cycles == osim.CYCLE_BLOCK
        src.cover(0.0)
        assert src.n_cycles == osim.CYCLE_BLOCK

    def test_without_regeneration_revolutions_repeat(self):
        frozen = osim.CycleConfig(OMEGA, 0.02, 2e-5, 7171.0, regenerate=False)
        src = osim.OrbitalSource(frozen, seed=5)
        src.add_cycles(3)
        t = np.random.default_rng(1).uniform(0, frozen.period, 5000)
        on = src.trace.is_on
        assert np.array_equal(on(t), on(t + frozen.period))
        assert np.array_equal(on(t), on(t + 2 * frozen.period))
        assert len(set(src.connectivity().band_counts.tolist())) == 1

    def test_band_count_mean(self):
        conn = osim.OrbitalSource(self.cycle, seed=1)
        conn.add_cycles(3000)
        counts = conn.connectivity().band_counts
        mean = self.cycle.band_mean
        assert abs(counts.mean() - mean) < 4 * math.sqrt(mean / counts.size)
        assert counts.var(ddof=1) == pytest.approx(mean, rel=0.1)


class TestConnectivity:
    def test_off_law(self, default_geometry):
        d = geometry.dome(default_geometry)
        conn = osim.simulate_connectivity(default_geometry, d, 3000, seed=2)
        rate = geometry.off_rate(default_geometry, d.earth_zenith)
        stat, crit = ks_statistic(conn.complete_off_durations, lambda x: -np.expm1(-rate * x))
        assert stat < crit

    def test_lag_correlation_small(self, default_geometry):
        d = geometry.dome(default_geometry)
        corr = osim.simulate_connectivity(default_geometry, d, 3000, seed=3).lag1_correlation
        assert abs(corr["off"]) < 0.02 and abs(corr["on"]) < 0.02

    def test_starved(self):
        cfg = geometry.GeometryConfig(node_zenith=math.radians(1.0), density=1e-12)
        d = geometry.dome(cfg)
        conn = osim.simulate_connectivity(cfg, d, 5, seed=0)
        assert conn.starved and conn.trace.durations.size == 1
        with pytest.raises(StarvationError):
            osim.run_geo_aoi(cfg, d, UpdateModel(1.0), 1000, seed=0)

    def test_bad_cycles(self, default_geometry):
        with pytest.raises(ParameterError):
            osim.simulate_connectivity(default_geometry, geometry.dome(default_geometry), 0, seed=0)

    def test_deterministic(self, default_geometry):
        d = geometry.dome(default_geometry)
        a = osim.run_geo_aoi(default_geometry, d, UpdateModel(1.0), 50_000, seed=8)
        b = osim.run_geo_aoi(default_geometry, d, UpdateModel(1.0), 50_000, seed=8)
        assert a == b
