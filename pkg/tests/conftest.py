import numpy as np
import pytest

from gcmkit.geogrid import DataCube, GridAxis, ZoneMask, date_range


@pytest.fixture
def tiny_cube():
    """2x2x2 cube with simple integer-valued payload."""
    return DataCube(
        lat=GridAxis([40.0, 41.0], "lat"),
        lon=GridAxis([10.0, 11.0], "lon"),
        time=((1985, 1, 1), (1985, 1, 2)),
        calendar="standard",
        variable="dtr",
        data=np.arange(8.0).reshape(2, 2, 2),
    )


@pytest.fixture
def year_cube():
    """One non-leap year of daily data on a 4x4 grid."""
    lat = GridAxis([40.0, 41.0, 42.0, 43.0], "lat")
    lon = GridAxis([10.0, 11.0, 12.0, 13.0], "lon")
    times = tuple(date_range("standard", (1985, 1, 1), 365))
    rng = np.random.default_rng(0)
    return DataCube(lat, lon, times, "standard", "dtr", 10.0 + rng.normal(size=(365, 4, 4)))


@pytest.fixture
def all_land_mask():
    lat = GridAxis([40.0, 41.0, 42.0, 43.0], "lat")
    lon = GridAxis([10.0, 11.0, 12.0, 13.0], "lon")
    codes = np.tile(np.array([1, 2, 3, 5])[:, None], (1, 4))
    return ZoneMask(lat, lon, codes)
