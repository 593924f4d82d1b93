"""Monte Carlo simulation of the on-off renewal process with Poisson updates.

Periods alternate off/on starting with an off period; off lengths are
exponential and on lengths follow the single-satellite chord law. An update
generated while on is delivered ``propagation_delay`` later, one generated
while off is lost. The age sawtooth is integrated exactly, one delivery
cycle at a time, starting from the first reception.

The estimation engine (:func:`simulate_aoi`) only needs a period source with
a ``cover(t)`` method and a ``trace`` attribute, so the geometric simulator
reuses it unchanged.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .aoi_analysis import UpdateModel
from .errors import ParameterError, StarvationError
from .onoff_process import OnOffParams, mean_service_time, sample_off_time, sample_service_time
from .stats import N_BATCHES, batch_ratio_std_error

MIN_ARRIVALS = 1000
CHUNK = 1 << 21
MIN_CLASS_COUNT = 100
MIN_CONDITIONAL_ARRIVALS = 10_000

PERIOD_STREAM = 0
ARRIVAL_STREAM = 1


def rng_stream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for sub-stream ``key`` of master ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def point_seed(master_seed: int, index: int) -> int:
    """Deterministic 63-bit seed for sweep point ``index``."""
    ss = np.random.SeedSequence(master_seed, spawn_key=(index,))
    return int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1))


@dataclass
class PeriodTrace:
    """Alternating service periods starting at time 0; ``durations[0]`` is an off period.

    Only the leading off period may have zero length, which encodes a trace
    that starts covered.
    """

    durations: np.ndarray
    ends: np.ndarray = field(init=False, repr=False)
    _off_cum: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.durations = np.asarray(self.durations, dtype=float)
        if self.durations.ndim != 1 or self.durations.size == 0:
            raise ParameterError("a trace needs at least one period")
        if np.any(~(self.durations[1:] > 0)) or not self.durations[0] >= 0:
            raise ParameterError("period durations must be positive")
        self.ends = np.cumsum(self.durations)
        off = self.durations.copy()
        off[1::2] = 0.0
        # off time accumulated up to the end of each period
        self._off_cum = np.cumsum(off)

    @property
    def end(self) -> float:
        return float(self.ends[-1])

    @property
    def kinds(self) -> np.ndarray:
        k = np.empty(self.durations.size, dtype="<U3")
        k[0::2] = "off"
        k[1::2] = "on"
        return k

    @property
    def off_durations(self) -> np.ndarray:
        return self.durations[0::2]

    @property
    def on_durations(self) -> np.ndarray:
        return self.durations[1::2]

    def period_index(self, t) -> np.ndarray:
        return np.searchsorted(self.ends, np.asarray(t, dtype=float), side="right")

    def is_on(self, t) -> np.ndarray:
        return self.period_index(t) % 2 == 1

    def off_time_before(self, t) -> np.ndarray:
        """Total off time in [0, t] (trace-relative time)."""
        t = np.asarray(t, dtype=float)
        i = self.period_index(t)
        done = np.where(i > 0, self._off_cum[np.maximum(i - 1, 0)], 0.0)
        start = np.where(i > 0, self.ends[np.maximum(i - 1, 0)], 0.0)
        partial = np.where(i % 2 == 0, t - start, 0.0)
        return done + partial


@dataclass(frozen=True)
class DeliveryRecord:
    """Per-delivery quantities; ``inter_delivery[k]`` spans deliveries k and k+1."""

    generation_time: np.ndarray
    reception_time: np.ndarray
    inter_delivery: np.ndarray
    service_delay: np.ndarray
    idle_gap: np.ndarray


@dataclass(frozen=True)
class ConditionalEstimate:
    value: float
    std_error: float
    count: int
    low_power: bool = False


@dataclass(frozen=True)
class Conditionals:
    p_f_given_f: ConditionalEstimate
    p_o_given_o: ConditionalEstimate
    p_off: ConditionalEstimate

    @property
    def flagged(self) -> tuple[str, ...]:
        return tuple(n for n in ("p_f_given_f", "p_o_given_o", "p_off") if getattr(self, n).low_power)


@dataclass(frozen=True)
class AoiEstimate:
    time_avg_aoi: float
    std_error: float
    n_arrivals: int
    n_delivered: int
    empirical_p_off: float
    empirical_p_f_given_f: float
    empirical_p_o_given_o: float
    empirical_mean_y: float
    empirical_second_moment_y: float
    p_off_se: float = math.nan
    p_f_given_f_se: float = math.nan
    p_o_given_o_se: float = math.nan
    mean_y_se: float = math.nan
    second_moment_y_se: float = math.nan
    n_off_periods: int = 0


def sawtooth_area(generation_times, delay: float) -> tuple[float, float]:
    """Area under the age curve between the first and last reception, and that span.

    Each cycle of length Y contributes Y**2 / 2 + delay * Y.
    """
    g = np.asarray(generation_times, dtype=float)
    y = np.diff(g)
    return float(np.sum(0.5 * y * y + delay * y)), float(np.sum(y))


def delivery_records(trace: PeriodTrace, arrival_times, delay: float) -> DeliveryRecord:
    t = np.asarray(arrival_times, dtype=float)
    g = t[trace.is_on(t)]
    y = np.diff(g)
    return DeliveryRecord(
        generation_time=g,
        reception_time=g + delay,
        inter_delivery=y,
        service_delay=np.full(y.size, float(delay)),
        idle_gap=g[1:] - (g[:-1] + delay),
    )


def _pair_counts(states: np.ndarray) -> tuple[int, int, int, int]:
    """(#off with successor, #off->off, #on with successor, #on->on)."""
    prev, nxt = states[:-1], states[1:]
    off = ~prev
    return int(off.sum()), int((off & ~nxt).sum()), int(prev.sum()), int((prev & nxt).sum())


def _estimate(num, den, min_count: int, weak: bool) -> ConditionalEstimate:
    total = float(np.sum(den))
    value = float(np.sum(num)) / total if total > 0 else math.nan
    return ConditionalEstimate(
        value=value,
        std_error=batch_ratio_std_error(num, den),
        count=int(total),
        low_power=weak or total < min_count,
    )


def empirical_conditionals(
    arrival_times, trace: PeriodTrace, n_batches: int = N_BATCHES, min_count: int = MIN_CLASS_COUNT
) -> Conditionals:
    """Frequency estimates of the conditional state probabilities and the off fraction.

    Standard errors come from ``n_batches`` contiguous batches of arrivals.
    Classes with fewer than ``min_count`` members, or runs shorter than
    10**4 arrivals, are flagged ``low_power``; their value is still reported.
    """
    t = np.asarray(arrival_times, dtype=float)
    if t.size < 2:
        raise ParameterError("need at least two arrivals")
    if t[-1] > trace.end:
        raise ParameterError("arrivals extend beyond the trace")
    states = trace.is_on(t)
    weak = t.size < MIN_CONDITIONAL_ARRIVALS
    splits = np.array_split(np.arange(t.size), n_batches)
    rows = []
    prev_last = None
    for idx in splits:
        if idx.size == 0:
            continue
        lo = idx[0] - 1 if idx[0] > 0 else idx[0]
        n_f, n_ff, n_o, n_oo = _pair_counts(states[lo : idx[-1] + 1])
        t0 = 0.0 if prev_last is None else t[prev_last]
        t1 = t[idx[-1]]
        off = float(trace.off_time_before(t1) - trace.off_time_before(t0))
        rows.append((n_f, n_ff, n_o, n_oo, off, t1 - t0))
        prev_last = idx[-1]
    r = np.array(rows, dtype=float)
    return Conditionals(
        p_f_given_f=_estimate(r[:, 1], r[:, 0], min_count, weak),
        p_o_given_o=_estimate(r[:, 3], r[:, 2], min_count, weak),
        p_off=_estimate(r[:, 4], r[:, 5], 0, weak),
    )


class RenewalSource:
    """Lazily extended i.i.d. alternating period sequence.

    Periods are drawn in fixed blocks so the trace is a prefix of the same
    infinite sequence however far it is extended.
    """

    BLOCK = 4096

    def __init__(self, params: OnOffParams, rng: np.random.Generator):
        self.params = params
        self.rng = rng
        self._blocks: list[np.ndarray] = []
        self._end = 0.0
        self._trace: PeriodTrace | None = None

    def cover(self, t: float) -> None:
        if self.params.off_rate == 0:
            if not self._blocks:
                self._blocks.append(np.array([math.inf]))
                self._end = math.inf
                self._trace = None
            return
        while self._end <= t:
            off = sample_off_time(self.params, self.rng, self.BLOCK)
            on = sample_service_time(self.params, self.rng, self.BLOCK)
            # an entry angle drawn exactly at the dome edge gives a zero-length period
            while np.any(bad := on <= 0):
                on[bad] = sample_service_time(self.params, self.rng, int(bad.sum()))
            while np.any(bad := off <= 0):
                off[bad] = sample_off_time(self.params, self.rng, int(bad.sum()))
            block = np.empty(2 * self.BLOCK)
            block[0::2] = off
            block[1::2] = on
            self._blocks.append(block)
            self._end += float(block.sum())
            self._trace = None

    @property
    def trace(self) -> PeriodTrace:
        if self._trace is None:
            self._trace = PeriodTrace(np.concatenate(self._blocks))
        return self._trace


def simulate_aoi(source, model: UpdateModel, n_arrivals: int, rng: np.random.Generator,
                 n_batches: int = N_BATCHES) -> AoiEstimate:
    """Stream ``n_arrivals`` Poisson updates through the periods of ``source``.

    Arrivals are split into ``n_batches`` contiguous batches; pooled
    estimates use all of them and standard errors come from the spread of
    the per-batch ratios.
    """
    if n_arrivals < MIN_ARRIVALS:
        raise ParameterError(f"n_arrivals must be >= {MIN_ARRIVALS}")
    mu, delay = model.update_rate, model.propagation_delay
    acc = np.zeros((n_batches, 12))
    # columns: area, sum_y, sum_y2, n_y, n_f, n_ff, n_o, n_oo, off_time, span, n_del, n_arr
    t_last = 0.0
    last_state = None
    last_delivery = None
    bounds = np.linspace(0, n_arrivals, n_batches + 1).astype(np.int64)
    for b in range(n_batches):
        remaining = int(bounds[b + 1] - bounds[b])
        t_start = t_last
        while remaining > 0:
            m = min(remaining, CHUNK)
            remaining -= m
            t = t_last + np.cumsum(rng.exponential(1.0 / mu, m))
            source.cover(t[-1])
            trace = source.trace
            on = trace.is_on(t)
            states = on if last_state is None else np.concatenate(([last_state], on))
            n_f, n_ff, n_o, n_oo = _pair_counts(states)
            g = t[on]
            if last_delivery is not None:
                g = np.concatenate(([last_delivery], g))
            y = np.diff(g)
            acc[b] += (
                np.sum(0.5 * y * y + delay * y), y.sum(), np.sum(y * y), y.size,
                n_f, n_ff, n_o, n_oo, 0.0, 0.0, on.sum(), m,
            )
            if g.size:
                last_delivery = g[-1]
            last_state = bool(on[-1])
            t_last = float(t[-1])
        trace = source.trace
        acc[b, 8] = float(trace.off_time_before(t_last) - trace.off_time_before(t_start))
        acc[b, 9] = t_last - t_start

    area, sy, sy2, ny = (acc[:, i] for i in range(4))
    n_del = int(acc[:, 10].sum())
    if ny.sum() < 1:
        raise StarvationError(f"{n_del} deliveries from {n_arrivals} arrivals; need at least 2")
    trace = source.trace
    n_off = int(np.searchsorted(trace.ends, t_last, side="right") // 2 + 1)
    return AoiEstimate(
        time_avg_aoi=float(area.sum() / sy.sum()),
        std_error=batch_ratio_std_error(area, sy),
        n_arrivals=int(n_arrivals),
        n_delivered=n_del,
        empirical_p_off=float(acc[:, 8].sum() / acc[:, 9].sum()),
        empirical_p_f_given_f=float(acc[:, 5].sum() / acc[:, 4].sum()) if acc[:, 4].sum() else math.nan,
        empirical_p_o_given_o=float(acc[:, 7].sum() / acc[:, 6].sum()) if acc[:, 6].sum() else math.nan,
        empirical_mean_y=float(sy.sum() / ny.sum()),
        empirical_second_moment_y=float(sy2.sum() / ny.sum()),
        p_off_se=batch_ratio_std_error(acc[:, 8], acc[:, 9]),
        p_f_given_f_se=batch_ratio_std_error(acc[:, 5], acc[:, 4]),
        p_o_given_o_se=batch_ratio_std_error(acc[:, 7], acc[:, 6]),
        mean_y_se=batch_ratio_std_error(sy, ny),
        second_moment_y_se=batch_ratio_std_error(sy2, ny),
        n_off_periods=n_off,
    )


def run(params: OnOffParams, model: UpdateModel, n_arrivals: int, seed: int,
        n_batches: int = N_BATCHES) -> AoiEstimate:
    source = RenewalSource(params, rng_stream(seed, PERIOD_STREAM))
    return simulate_aoi(source, model, n_arrivals, rng_stream(seed, ARRIVAL_STREAM), n_batches)


def arrivals_for_power(params: OnOffParams, model: UpdateModel, n_arrivals: int, min_off_periods: int) -> int:
    """Raise ``n_arrivals`` so the simulated span holds about ``min_off_periods`` off periods.

    The age estimate is dominated by the long off periods, so its relative
    error scales like one over the square root of their count rather than of
    the arrival count.
    """
    if min_off_periods <= 0 or params.off_rate == 0:
        return int(n_arrivals)
    cycle = 1.0 / params.off_rate + mean_service_time(params)
    return int(max(n_arrivals, math.ceil(model.update_rate * min_off_periods * cycle)))
