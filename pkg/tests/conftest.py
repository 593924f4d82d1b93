import math

import pytest

from ntn_aoi.aoi_analysis import UpdateModel
from ntn_aoi.geometry import GeometryConfig
from ntn_aoi.onoff_process import OnOffParams

DEFAULT_DENSITY = 2e-5


@pytest.fixture
def default_geometry() -> GeometryConfig:
    return GeometryConfig(node_zenith=math.radians(1.0), density=DEFAULT_DENSITY)


@pytest.fixture
def default_params(default_geometry) -> OnOffParams:
    return OnOffParams.from_geometry(default_geometry)


@pytest.fixture
def default_model() -> UpdateModel:
    return UpdateModel(update_rate=1.0, propagation_delay=1.0)


@pytest.fixture
def wide_params() -> OnOffParams:
    """A wider dome where on periods are long enough to matter."""
    return OnOffParams(off_rate=0.02, earth_zenith=0.05, angular_rate=math.pi / 3600)
