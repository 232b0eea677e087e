"""Spherical Albers equal-area conic projection.

Map units are Earth radii on the unit sphere; the renderer rescales to the
canvas, so the absolute scale is irrelevant.  Parameters default to the
standard continental-US configuration; an Alaska preset supports views of
high-latitude areas.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class AlbersParams:
    """Two standard parallels and the reference longitude/latitude, degrees."""

    lat1: float = 29.5
    lat2: float = 45.5
    lon0: float = -96.0
    lat0: float = 37.5

    def __post_init__(self) -> None:
        if self.lat1 == self.lat2:
            raise ValueError("standard parallels must be distinct")
        for lat in (self.lat1, self.lat2, self.lat0):
            if not -90.0 < lat < 90.0:
                raise ValueError(f"latitude parameter {lat} out of range (-90, 90)")


CONUS = AlbersParams()
ALASKA = AlbersParams(lat1=55.0, lat2=65.0, lon0=-154.0, lat0=50.0)

PRESETS = {"conus": CONUS, "alaska": ALASKA}


def project_albers(lon: float, lat: float, params: AlbersParams = CONUS) -> tuple[float, float]:
    """Project (lon, lat) degrees to planar (x, y); y increases northward.

    The reference point maps to (0, 0).  Poles are rejected: the cone
    degenerates there and no area can meaningfully include them.
    """
    if not -90.0 < lat < 90.0:
        raise ValueError(f"latitude {lat} at or beyond the poles cannot be projected")
    phi = math.radians(lat)
    phi0 = math.radians(params.lat0)
    phi1 = math.radians(params.lat1)
    phi2 = math.radians(params.lat2)
    n = 0.5 * (math.sin(phi1) + math.sin(phi2))
    c = math.cos(phi1) ** 2 + 2.0 * n * math.sin(phi1)
    rho_sq = c - 2.0 * n * math.sin(phi)
    if rho_sq <= 0.0:
        raise ValueError(f"latitude {lat} outside the projectable range for these parallels")
    rho = math.sqrt(rho_sq) / n
    rho0 = math.sqrt(c - 2.0 * n * math.sin(phi0)) / n
    dlon = math.radians(((lon - params.lon0 + 180.0) % 360.0) - 180.0)
    theta = n * dlon
    x = rho * math.sin(theta)
    y = rho0 - rho * math.cos(theta)
    return x, y
