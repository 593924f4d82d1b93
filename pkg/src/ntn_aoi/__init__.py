"""Age of information for a ground node served by a Poisson LEO constellation."""
from .aoi_analysis import AoiBreakdown, UpdateModel, breakdown, time_avg_aoi
from .errors import ParameterError, PermanentDisconnectionError, StarvationError
from .geometry import DomeSpec, GeometryConfig, LinkBudget, dome
from .onoff_process import OnOffParams

__all__ = [
    "AoiBreakdown", "DomeSpec", "GeometryConfig", "LinkBudget", "OnOffParams", "ParameterError",
    "PermanentDisconnectionError", "StarvationError", "UpdateModel", "breakdown", "dome", "time_avg_aoi",
]
