import math

import numpy as np
import pytest
from scipy import special, stats as sps

from ntn_aoi.errors import ParameterError
from ntn_aoi.stats import (
    batch_ratio_std_error,
    batch_std_error,
    gauss_legendre,
    kolmogorov_critical_value,
    ks_statistic,
    quadrature,
    summarize,
)


class TestSummarize:
    def test_known_values(self):
        s = summarize([1.0, 2.0, 3.0, 4.0])
        assert s.mean == 2.5
        assert s.variance == pytest.approx(5.0 / 3.0)
        assert s.second_moment == 7.5
        assert (s.min, s.max, s.count) == (1.0, 4.0, 4)

    def test_single_sample_has_zero_variance(self):
        s = summarize([3.0])
        assert s.variance == 0.0 and s.std_error == 0.0

    def test_empty_rejected(self):
        with pytest.raises(ParameterError):
            summarize([])

    def test_order_independent(self):
        rng = np.random.default_rng(3)
        x = rng.standard_cauchy(10_001)
        assert summarize(x).mean == summarize(x[::-1]).mean


class TestBatchErrors:
    def test_calibrated_on_iid_data(self):
        # one estimate has ~16% spread with 20 batches, so check the average
        n = 20_000
        ratios = [batch_std_error(np.random.default_rng(s).normal(size=n)) * math.sqrt(n) for s in range(200)]
        assert np.mean(ratios) == pytest.approx(1.0, abs=0.04)

    def test_small_sample_falls_back_to_iid(self):
        x = np.array([1.0, 2.0, 4.0, 8.0])
        assert batch_std_error(x) == pytest.approx(np.std(x, ddof=1) / 2)

    def test_correlated_series_gets_larger_error(self):
        rng = np.random.default_rng(1)
        e = rng.normal(size=100_000)
        ar = np.empty_like(e)
        ar[0] = e[0]
        for i in range(1, e.size):
            ar[i] = 0.9 * ar[i - 1] + e[i]
        naive = np.std(ar, ddof=1) / math.sqrt(ar.size)
        assert batch_std_error(ar) > 2 * naive

    def test_ratio_needs_two_batches(self):
        assert math.isnan(batch_ratio_std_error([1.0], [2.0]))
        assert batch_ratio_std_error([1, 2, 3], [2, 4, 6]) == 0.0


class TestKolmogorov:
    @pytest.mark.parametrize("alpha", [0.01, 0.05, 0.1])
    def test_critical_value_matches_limit_distribution(self, alpha):
        n = 10_000
        assert kolmogorov_critical_value(n, alpha) == pytest.approx(special.kolmogi(alpha) / math.sqrt(n), rel=1e-3)

    def test_statistic_matches_scipy(self):
        x = np.random.default_rng(5).exponential(2.0, 3000)
        ours, _ = ks_statistic(x, lambda t: sps.expon.cdf(t, scale=2.0))
        assert ours == pytest.approx(sps.kstest(x, "expon", args=(0, 2.0)).statistic, abs=1e-12)

    def test_wrong_law_rejected(self):
        x = np.random.default_rng(5).exponential(2.0, 20_000)
        d, crit = ks_statistic(x, lambda t: -np.expm1(-t))
        assert d > crit

    def test_bad_arguments(self):
        with pytest.raises(ParameterError):
            kolmogorov_critical_value(0)
        with pytest.raises(ParameterError):
            ks_statistic([], lambda t: t)


class TestQuadrature:
    @pytest.mark.parametrize(
        "f, lo, hi, ref",
        [
            (np.exp, 0.0, 1.0, math.e - 1),
            (np.sin, 0.0, math.pi, 2.0),
            (lambda x: 1 / (1 + x * x), -3.0, 5.0, math.atan(5) + math.atan(3)),
        ],
    )
    def test_smooth_integrands(self, f, lo, hi, ref):
        val, err = quadrature(f, lo, hi)
        assert val == pytest.approx(ref, rel=1e-13)
        assert err < 1e-10

    def test_polynomial_exactness(self):
        # an n-point rule integrates degree 2n-1 exactly
        assert gauss_legendre(lambda x: x**7, 0.0, 2.0, 4) == pytest.approx(32.0, rel=1e-14)

    def test_nonfinite_integrand_rejected(self):
        with pytest.raises(ParameterError):
            gauss_legendre(lambda x: np.full_like(x, np.nan), 0, 1, 8)
