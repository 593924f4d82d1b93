"""Closed-form time-average age of information for an on-off served source.

Updates are generated as a Poisson stream of rate ``update_rate``; those
generated while the source is covered arrive after a fixed delay, the rest
are lost. The chain below exposes every intermediate quantity so each can be
checked against simulation on its own.

Complements such as 1 - a and 1 - b are computed directly rather than by
subtraction, which keeps the chain accurate for very small and very large
update rates.
"""
from __future__ import annotations

from dataclasses import dataclass

from .errors import ParameterError, PermanentDisconnectionError
from .onoff_process import OnOffParams, mean_service_time, service_laplace, service_laplace_complement


@dataclass(frozen=True)
class UpdateModel:
    update_rate: float
    propagation_delay: float = 1.0

    def __post_init__(self):
        if not self.update_rate > 0:
            raise ParameterError("update_rate must be positive")
        if not self.propagation_delay >= 0:
            raise ParameterError("propagation_delay must be non-negative")


@dataclass(frozen=True)
class AoiBreakdown:
    a: float
    b: float
    p_f_given_f: float
    p_off: float
    p_o_given_o: float
    gamma: float
    mean_y: float
    second_moment_y: float
    time_avg_aoi: float


@dataclass(frozen=True)
class _Chain:
    a: float
    one_minus_a: float
    b: float
    one_minus_b: float
    p_ff: float
    one_minus_p_ff: float
    p_off: float
    one_minus_p_off: float


def _chain(params: OnOffParams, model: UpdateModel) -> _Chain:
    mu, lam = model.update_rate, params.off_rate
    a = lam / (mu + lam)
    one_minus_a = mu / (mu + lam)
    b = service_laplace(params, mu)
    one_minus_b = service_laplace_complement(params, mu)
    denom = one_minus_a + a * one_minus_b  # 1 - a b
    load = lam * mean_service_time(params)
    return _Chain(
        a=a,
        one_minus_a=one_minus_a,
        b=b,
        one_minus_b=one_minus_b,
        p_ff=one_minus_a / denom,
        one_minus_p_ff=a * one_minus_b / denom,
        p_off=1.0 / (1.0 + load),
        one_minus_p_off=load / (1.0 + load),
    )


def p_f_given_f(params: OnOffParams, model: UpdateModel) -> float:
    """P(next update generated while off | previous update generated while off)."""
    return _chain(params, model).p_ff


def p_off(params: OnOffParams) -> float:
    """Long-run fraction of time the source is not covered."""
    return 1.0 / (1.0 + params.off_rate * mean_service_time(params))


def _one_minus_p_oo(c: _Chain) -> float:
    if c.one_minus_p_off == 0:
        raise PermanentDisconnectionError("off-rate is zero: the source is never covered")
    # 1 - P_o|o = (1 - P_f|f) P_off / (1 - P_off), from P_fo = P_of
    return c.one_minus_p_ff * c.p_off / c.one_minus_p_off


def p_o_given_o(params: OnOffParams, model: UpdateModel) -> float:
    """P(next update generated while on | previous update generated while on)."""
    return 1.0 - _one_minus_p_oo(_chain(params, model))


def _moments(mu: float, gamma: float, one_minus_poo: float) -> tuple[float, float]:
    mean_y = 1.0 / mu + gamma / mu * one_minus_poo
    second = 2.0 / mu**2 + 2.0 * (gamma + gamma * gamma) / mu**2 * one_minus_poo
    return mean_y, second


def _gamma(c: _Chain) -> float:
    return 1.0 / c.one_minus_p_ff if c.one_minus_p_ff > 0 else float("inf")


def moments_y(params: OnOffParams, model: UpdateModel) -> tuple[float, float]:
    """First and second moments of the time between consecutive deliveries."""
    c = _chain(params, model)
    return _moments(model.update_rate, _gamma(c), _one_minus_p_oo(c))


def _closed_form(mu: float, delay: float, gamma: float, one_minus_poo: float) -> float:
    return gamma**2 * one_minus_poo / (mu + mu * gamma * one_minus_poo) + 1.0 / mu + delay


def time_avg_aoi(params: OnOffParams, model: UpdateModel) -> float:
    c = _chain(params, model)
    return _closed_form(model.update_rate, model.propagation_delay, _gamma(c), _one_minus_p_oo(c))


def aoi_from_moments(mean_y: float, second_moment_y: float, delay: float) -> float:
    """Renewal-reward form E[Y^2] / (2 E[Y]) + D."""
    return second_moment_y / (2.0 * mean_y) + delay


def breakdown(params: OnOffParams, model: UpdateModel) -> AoiBreakdown:
    c = _chain(params, model)
    mu = model.update_rate
    gamma = _gamma(c)
    one_minus_poo = _one_minus_p_oo(c)
    mean_y, second = _moments(mu, gamma, one_minus_poo)
    return AoiBreakdown(
        a=c.a,
        b=c.b,
        p_f_given_f=c.p_ff,
        p_off=c.p_off,
        p_o_given_o=1.0 - one_minus_poo,
        gamma=gamma,
        mean_y=mean_y,
        second_moment_y=second,
        time_avg_aoi=_closed_form(mu, model.propagation_delay, gamma, one_minus_poo),
    )
