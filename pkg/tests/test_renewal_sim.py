import math

import numpy as np
import pytest

from ntn_aoi import renewal_sim as rs
from ntn_aoi.aoi_analysis import UpdateModel, breakdown
from ntn_aoi.errors import ParameterError, StarvationError
from ntn_aoi.onoff_process import OnOffParams


def brute_force_area(gen_times, delay, n_grid=2_000_001):
    """Integrate t - G(t) on a fine grid between the first and last reception."""
    g = np.asarray(gen_times, dtype=float)
    rec = g + delay
    t = np.linspace(rec[0], rec[-1], n_grid)
    newest = g[np.searchsorted(rec, t, side="right") - 1]
    return np.trapezoid(t - newest, t), rec[-1] - rec[0]


class TestSawtooth:
    def test_hand_example(self):
        area, span = rs.sawtooth_area([1.0, 3.0, 6.0], 0.5)
        assert (area, span) == (9.0, 5.0)
        assert area / span == 1.8

    def test_against_brute_force(self):
        g = np.cumsum(np.random.default_rng(8).exponential(1.0, 40))
        area, span = rs.sawtooth_area(g, 0.7)
        ref_area, ref_span = brute_force_area(g, 0.7)
        assert span == pytest.approx(ref_span)
        assert area == pytest.approx(ref_area, rel=1e-5)


class TestPeriodTrace:
    trace = rs.PeriodTrace(np.array([2.0, 1.0, 3.0, 2.0]))

    def test_states(self):
        t = np.array([0.5, 2.0, 2.5, 3.5, 6.5, 8.5])
        assert self.trace.is_on(t).tolist() == [False, True, True, False, True, False]
        assert self.trace.kinds.tolist() == ["off", "on", "off", "on"]

    def test_off_time(self):
        assert self.trace.off_time_before(np.array([1.0, 2.5, 4.0, 7.0])).tolist() == [1.0, 2.0, 3.0, 5.0]

    def test_zero_leading_off_allowed(self):
        tr = rs.PeriodTrace(np.array([0.0, 1.0, 2.0]))
        assert tr.is_on(0.0)

    @pytest.mark.parametrize("d", [[], [1.0, 0.0, 1.0], [-1.0, 1.0], [1.0, np.nan]])
    def test_rejected(self, d):
        with pytest.raises(ParameterError):
            rs.PeriodTrace(np.array(d))

    def test_delivery_records(self):
        rec = rs.delivery_records(self.trace, [0.5, 2.5, 2.7, 4.0, 7.0], 0.25)
        assert rec.generation_time.tolist() == [2.5, 2.7, 7.0]
        assert rec.reception_time.tolist() == [2.75, 2.95, 7.25]
        assert np.allclose(rec.inter_delivery, [0.2, 4.3])
        assert np.allclose(rec.idle_gap, [-0.05, 4.05])


class TestConditionals:
    def test_hand_counts(self):
        trace = rs.PeriodTrace(np.array([2.0, 1.0, 3.0, 2.0]))
        arrivals = [0.5, 1.0, 2.5, 2.7, 4.0, 7.0, 7.5]  # f f o o f o o
        c = rs.empirical_conditionals(arrivals, trace, n_batches=1)
        assert c.p_f_given_f.value == pytest.approx(1 / 3)
        assert c.p_o_given_o.value == pytest.approx(2 / 3)
        assert c.p_off.value == pytest.approx(5.0 / 7.5)
        assert set(c.flagged) == {"p_f_given_f", "p_o_given_o", "p_off"}

    def test_arrivals_beyond_trace(self):
        with pytest.raises(ParameterError):
            rs.empirical_conditionals([1.0, 20.0], rs.PeriodTrace(np.array([2.0, 1.0])))

    def test_large_run_not_flagged(self, wide_params):
        src = rs.RenewalSource(wide_params, rs.rng_stream(1, 0))
        t = np.cumsum(rs.rng_stream(1, 1).exponential(1.0, 200_000))
        src.cover(t[-1])
        assert rs.empirical_conditionals(t, src.trace).flagged == ()


class TestSeeding:
    def test_point_seeds(self):
        seeds = {rs.point_seed(42, i) for i in range(1000)}
        assert len(seeds) == 1000
        assert all(0 <= s < 2**63 for s in seeds)
        assert rs.point_seed(42, 3) == rs.point_seed(42, 3)

    def test_streams_independent(self):
        a = rs.rng_stream(5, 0).random(4)
        b = rs.rng_stream(5, 1).random(4)
        assert not np.array_equal(a, b)

    def test_source_is_prefix_stable(self, wide_params):
        a = rs.RenewalSource(wide_params, rs.rng_stream(9, 0))
        a.cover(1e6)
        b = rs.RenewalSource(wide_params, rs.rng_stream(9, 0))
        for t in (10.0, 5e4, 1e6):
            b.cover(t)
        assert np.array_equal(a.trace.durations, b.trace.durations)


class TestSimulation:
    def test_deterministic(self, wide_params, default_model):
        a = rs.run(wide_params, default_model, 20_000, seed=3)
        b = rs.run(wide_params, default_model, 20_000, seed=3)
        c = rs.run(wide_params, default_model, 20_000, seed=4)
        assert a == b
        assert a.time_avg_aoi != c.time_avg_aoi

    def test_matches_closed_form(self, wide_params):
        # a dome wide enough that on periods (about 90 s) span many updates
        m = UpdateModel(0.5, 1.0)
        est = rs.run(wide_params, m, 400_000, seed=12)
        ref = breakdown(wide_params, m)
        for got, se, want in [
            (est.empirical_p_off, est.p_off_se, ref.p_off),
            (est.empirical_p_f_given_f, est.p_f_given_f_se, ref.p_f_given_f),
            (est.empirical_p_o_given_o, est.p_o_given_o_se, ref.p_o_given_o),
            (est.empirical_mean_y, est.mean_y_se, ref.mean_y),
        ]:
            assert abs(got - want) < 4 * se
        assert est.time_avg_aoi == pytest.approx(ref.time_avg_aoi, rel=0.03)

    def test_batch_count_does_not_change_estimate_much(self, wide_params, default_model):
        a = rs.run(wide_params, default_model, 50_000, seed=1, n_batches=10)
        b = rs.run(wide_params, default_model, 50_000, seed=1, n_batches=40)
        assert a.time_avg_aoi == pytest.approx(b.time_avg_aoi, rel=1e-9)

    def test_too_few_arrivals(self, wide_params, default_model):
        with pytest.raises(ParameterError):
            rs.run(wide_params, default_model, 10, seed=0)

    def test_starvation(self, default_model):
        with pytest.raises(StarvationError):
            rs.run(OnOffParams(0.0, 0.01, 1.0), default_model, 1000, seed=0)

    def test_arrivals_for_power(self, default_params, default_model):
        assert rs.arrivals_for_power(default_params, default_model, 1000, 0) == 1000
        n = rs.arrivals_for_power(default_params, default_model, 1000, 40_000)
        assert n == math.ceil(40_000 * (1 / default_params.off_rate + 3.5050740747616))
        assert rs.arrivals_for_power(default_params, default_model, 10**9, 40_000) == 10**9
