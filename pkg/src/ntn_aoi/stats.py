"""Moment estimators, batch-means standard errors, KS statistic and Gauss-Legendre quadrature."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import ParameterError

N_BATCHES = 20


@dataclass(frozen=True)
class Summary:
    mean: float
    variance: float
    second_moment: float
    count: int
    std_error: float
    min: float
    max: float


def batch_std_error(values, n_batches: int = N_BATCHES) -> float:
    """Standard error of the mean from contiguous batch means.

    Falls back to the i.i.d. formula when there are fewer samples than batches.
    """
    x = np.asarray(values, dtype=float)
    n = x.size
    if n < 2:
        return 0.0
    if n < 2 * n_batches:
        return float(np.std(x, ddof=1) / math.sqrt(n))
    means = np.array([b.mean() for b in np.array_split(x, n_batches)])
    return float(np.std(means, ddof=1) / math.sqrt(n_batches))


def batch_ratio_std_error(numerators, denominators) -> float:
    """Standard error of a pooled ratio sum(num)/sum(den) from per-batch ratios."""
    num = np.asarray(numerators, dtype=float)
    den = np.asarray(denominators, dtype=float)
    ok = den > 0
    if ok.sum() < 2:
        return math.nan
    ratios = num[ok] / den[ok]
    return float(np.std(ratios, ddof=1) / math.sqrt(ratios.size))


def summarize(samples, n_batches: int = N_BATCHES) -> Summary:
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise ParameterError("cannot summarize an empty sample")
    # sorting makes the float sums order independent
    x = np.sort(x)
    n = x.size
    mean = float(math.fsum(x) / n)
    second = float(math.fsum(x * x) / n)
    var = float(math.fsum((x - mean) ** 2) / (n - 1)) if n > 1 else 0.0
    return Summary(
        mean=mean,
        variance=var,
        second_moment=second,
        count=n,
        std_error=batch_std_error(np.asarray(samples, dtype=float).ravel(), n_batches),
        min=float(x[0]),
        max=float(x[-1]),
    )


def kolmogorov_critical_value(n: int, alpha: float = 0.01) -> float:
    """Asymptotic one-sample critical value sqrt(-ln(alpha/2)/2)/sqrt(n)."""
    if n <= 0 or not 0.0 < alpha < 1.0:
        raise ParameterError("need n > 0 and 0 < alpha < 1")
    return math.sqrt(-0.5 * math.log(alpha / 2.0)) / math.sqrt(n)


def ks_statistic(samples, cdf: Callable, alpha: float = 0.01) -> tuple[float, float]:
    """One-sample Kolmogorov-Smirnov statistic and its critical value at ``alpha``.

    ``cdf`` must accept a numpy array. Reject the null when statistic > critical.
    """
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    n = x.size
    if n == 0:
        raise ParameterError("KS statistic needs at least one sample")
    f = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    d_plus = np.max(i / n - f)
    d_minus = np.max(f - (i - 1) / n)
    return float(max(d_plus, d_minus)), kolmogorov_critical_value(n, alpha)


@lru_cache(maxsize=32)
def _gl_nodes(order: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(order)


def gauss_legendre(f: Callable, lo: float, hi: float, order: int) -> float:
    x, w = _gl_nodes(order)
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    y = np.asarray(f(mid + half * x), dtype=float)
    if not np.all(np.isfinite(y)):
        raise ParameterError("integrand is not finite at a quadrature node")
    return float(half * np.dot(w, y))


def quadrature(f: Callable, lo: float, hi: float, order: int = 64) -> tuple[float, float]:
    """Integrate ``f`` over [lo, hi] with Gauss-Legendre rules of order n and 2n.

    Returns the order-2n value and |Q_n - Q_2n| as the error estimate.
    """
    if order < 1:
        raise ParameterError("quadrature order must be positive")
    coarse = gauss_legendre(f, lo, hi, order)
    fine = gauss_legendre(f, lo, hi, 2 * order)
    return fine, abs(fine - coarse)
