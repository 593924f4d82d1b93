"""Spherical link geometry: coverage dome, zenith angles and satellite arrival rate.

Units are kilometres, seconds and radians throughout.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ParameterError

EARTH_RADIUS_KM = 6371.0
DEFAULT_ALTITUDE_KM = 800.0
DEFAULT_ANGULAR_RATE = math.pi / 3600.0

# below this cos(node_zenith) the range formula is replaced by its horizon limit
_HORIZON_COS_TOL = 1e-6


@dataclass(frozen=True)
class LinkBudget:
    tx_power: float
    noise_power: float
    snr_threshold: float
    pathloss_exponent: float

    def __post_init__(self):
        for name in ("tx_power", "noise_power", "snr_threshold", "pathloss_exponent"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ParameterError(f"{name} must be finite and positive, got {v!r}")
        if self.pathloss_exponent < 2:
            raise ParameterError("pathloss_exponent must be >= 2")


@dataclass(frozen=True)
class GeometryConfig:
    """Orbital shell, node motion and coverage definition.

    Exactly one of ``node_zenith`` (rad) or ``max_range`` (km) is given; the
    other is derived by :func:`dome`.
    """

    altitude: float = DEFAULT_ALTITUDE_KM
    angular_rate: float = DEFAULT_ANGULAR_RATE
    density: float = 0.0
    node_zenith: float | None = None
    max_range: float | None = None
    earth_radius: float = EARTH_RADIUS_KM

    def __post_init__(self):
        if not self.earth_radius > 0:
            raise ParameterError("earth_radius must be positive")
        if not self.altitude > 0:
            raise ParameterError("altitude must be positive")
        if not self.angular_rate > 0:
            raise ParameterError("angular_rate must be positive")
        if not (self.density >= 0 and math.isfinite(self.density)):
            raise ParameterError("density must be finite and non-negative")
        if (self.node_zenith is None) == (self.max_range is None):
            raise ParameterError("supply exactly one of node_zenith or max_range")
        if self.node_zenith is not None and not 0 < self.node_zenith <= math.pi / 2:
            raise ParameterError("node_zenith must lie in (0, pi/2]")
        if self.max_range is not None and not self.max_range > self.altitude:
            raise ParameterError("max_range must exceed the altitude")

    @classmethod
    def from_budget(cls, budget: LinkBudget, **kwargs) -> "GeometryConfig":
        return cls(max_range=max_range_from_budget(budget), **kwargs)

    @property
    def orbit_radius(self) -> float:
        return self.earth_radius + self.altitude

    @property
    def rho(self) -> float:
        return self.earth_radius / self.orbit_radius

    @property
    def revolution_period(self) -> float:
        return 2.0 * math.pi / self.angular_rate


@dataclass(frozen=True)
class DomeSpec:
    earth_zenith: float
    node_zenith: float
    max_range: float
    sweep_rate_area: float  # km^2 of orbital sphere entering the dome per second


def max_range_from_budget(budget: LinkBudget) -> float:
    """Largest distance at which the SNR still reaches the decoding threshold."""
    ratio = budget.tx_power / (budget.noise_power * budget.snr_threshold)
    return ratio ** (1.0 / budget.pathloss_exponent)


def earth_zenith_from_node_zenith(node_zenith: float, rho: float) -> float:
    """Earth-centred half-angle of the dome seen under node zenith angle ``node_zenith``.

    Evaluates the inverse cotangent as atan of the reciprocal, which keeps the
    result in [0, pi/2). ``node_zenith == 0`` returns 0 (satellite overhead).
    """
    if not 0 < rho < 1:
        raise ParameterError("rho must lie in (0, 1)")
    if node_zenith == 0:
        return 0.0
    if not 0 < node_zenith <= math.pi / 2:
        raise ParameterError("node_zenith must lie in [0, pi/2]")
    cot_s = math.cos(node_zenith) / math.sin(node_zenith)
    one_minus = 1.0 - rho * rho
    arg = (cot_s + rho * math.sqrt(cot_s * cot_s + one_minus)) / one_minus
    return math.atan(1.0 / arg)


def max_range_from_angles(cfg: GeometryConfig, earth_zenith: float, node_zenith: float | None = None) -> float:
    """Slant range to the dome edge.

    At the horizon (cos(node_zenith) -> 0) the ratio is 0/0; the equivalent
    tangent length sqrt((R+h)^2 - R^2) is returned instead.
    """
    phi_s = cfg.node_zenith if node_zenith is None else node_zenith
    if phi_s is None:
        raise ParameterError("node_zenith is required")
    cos_s = math.cos(phi_s)
    if cos_s < _HORIZON_COS_TOL:
        return math.sqrt(cfg.orbit_radius**2 - cfg.earth_radius**2)
    return (cfg.orbit_radius * math.cos(earth_zenith) - cfg.earth_radius) / cos_s


def angles_from_max_range(cfg: GeometryConfig, max_range: float) -> tuple[float, float]:
    """Invert the slant range into (node_zenith, earth_zenith)."""
    R, Rh, h = cfg.earth_radius, cfg.orbit_radius, cfg.altitude
    horizon = math.sqrt(Rh**2 - R**2)
    if not h < max_range <= horizon * (1 + 1e-12):
        raise ParameterError(f"max_range must lie in ({h}, {horizon:.6f}] km, got {max_range}")
    max_range = min(max_range, horizon)
    # r^2 = h^2 + 4 R (R+h) sin^2(phi_e/2)
    half = math.sqrt((max_range**2 - h**2) / (4.0 * R * Rh))
    phi_e = 2.0 * math.asin(min(half, 1.0))
    sin_s = Rh * math.sin(phi_e) / max_range
    cos_s = (Rh * math.cos(phi_e) - R) / max_range
    return math.atan2(sin_s, max(cos_s, 0.0)), phi_e


def dome(cfg: GeometryConfig) -> DomeSpec:
    if cfg.node_zenith is not None:
        phi_s = cfg.node_zenith
        phi_e = earth_zenith_from_node_zenith(phi_s, cfg.rho)
        r = max_range_from_angles(cfg, phi_e)
    else:
        phi_s, phi_e = angles_from_max_range(cfg, cfg.max_range)
        r = cfg.max_range
    sweep = 2.0 * cfg.orbit_radius**2 * cfg.angular_rate * math.sin(phi_e)
    return DomeSpec(earth_zenith=phi_e, node_zenith=phi_s, max_range=r, sweep_rate_area=sweep)


def off_rate(cfg: GeometryConfig, earth_zenith: float) -> float:
    """Rate (1/s) of the exponential off-service periods: density times swept area rate."""
    if not 0 <= earth_zenith < math.pi / 2:
        raise ParameterError("earth_zenith must lie in [0, pi/2)")
    return 2.0 * cfg.angular_rate * cfg.density * math.sin(earth_zenith) * cfg.orbit_radius**2


def satellite_count(density: float, cfg: GeometryConfig) -> float:
    """Mean number of satellites on the orbital sphere (PPP mean, not a draw)."""
    if density < 0:
        raise ParameterError("density must be non-negative")
    return density * 4.0 * math.pi * cfg.orbit_radius**2


def density_from_count(count: float, cfg: GeometryConfig) -> float:
    if count < 0:
        raise ParameterError("count must be non-negative")
    return count / (4.0 * math.pi * cfg.orbit_radius**2)


def band_area(cfg: GeometryConfig, earth_zenith: float) -> float:
    """Area of the spherical zone |latitude| <= earth_zenith swept by the dome in one revolution."""
    return 4.0 * math.pi * cfg.orbit_radius**2 * math.sin(earth_zenith)
