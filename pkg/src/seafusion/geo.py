"""Geographic positions, local tangent-plane frames, and surveillance regions.

All local-frame computations use an equirectangular projection about a frame
origin: x grows east, y grows north, both in meters.  Surveillance regions in
this toolkit span at most a few hundred kilometers, where the projection error
is negligible relative to sensor noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple

import numpy as np

EARTH_RADIUS_M = 6371000.0

_DEG = math.pi / 180.0


def _normalize_lon(lon: float) -> float:
    """Wrap a longitude into [-180, 180)."""
    lon = math.fmod(lon + 180.0, 360.0)
    if lon < 0.0:
        lon += 360.0
    return lon - 180.0


@dataclass(frozen=True)
class GeoPosition:
    """WGS-ish latitude/longitude pair in degrees.

    Latitude must lie in [-90, 90]; longitude is normalized into
    [-180, 180) on construction.
    """

    lat: float
    lon: float

    def __post_init__(self):
        if not math.isfinite(self.lat) or not math.isfinite(self.lon):
            raise ValueError(f"non-finite coordinates ({self.lat}, {self.lon})")
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude out of range: {self.lat}")
        object.__setattr__(self, "lon", _normalize_lon(self.lon))


@dataclass(frozen=True)
class LocalFrame:
    """Equirectangular tangent frame about ``origin``.

    Meters-per-degree factors are fixed from the origin latitude, so the
    geo->local->geo round trip is exact up to floating point for any point
    the projection is valid for (within ~500 km of the origin).
    """

    origin: GeoPosition

    @property
    def m_per_deg_lat(self) -> float:
        return _DEG * EARTH_RADIUS_M

    @property
    def m_per_deg_lon(self) -> float:
        return _DEG * EARTH_RADIUS_M * math.cos(self.origin.lat * _DEG)


def to_local(p: GeoPosition, frame: LocalFrame) -> Tuple[float, float]:
    """Project ``p`` into ``frame``; returns (x east, y north) in meters."""
    dlon = _normalize_lon(p.lon - frame.origin.lon)
    x = dlon * frame.m_per_deg_lon
    y = (p.lat - frame.origin.lat) * frame.m_per_deg_lat
    return x, y


def from_local(x: float, y: float, frame: LocalFrame) -> GeoPosition:
    """Inverse of :func:`to_local`."""
    lat = frame.origin.lat + y / frame.m_per_deg_lat
    lon = frame.origin.lon + x / frame.m_per_deg_lon
    return GeoPosition(lat, lon)


def to_local_array(points: Iterable[GeoPosition], frame: LocalFrame) -> np.ndarray:
    """Vectorized :func:`to_local`; returns an (n, 2) array."""
    pts = list(points)
    out = np.empty((len(pts), 2))
    for i, p in enumerate(pts):
        out[i] = to_local(p, frame)
    return out


class Region:
    """Simple polygon region (lat/lon vertices, implicit closure).

    Supports containment tests, distance to the boundary, area, and uniform
    sampling, all computed in a private local frame anchored at the polygon
    centroid.  Vertices must describe a simple (non self-intersecting)
    polygon; orientation does not matter.
    """

    def __init__(self, vertices: Sequence[GeoPosition]):
        if len(vertices) < 3:
            raise ValueError("a region polygon needs at least 3 vertices")
        self.vertices = tuple(vertices)
        lat0 = sum(v.lat for v in vertices) / len(vertices)
        lon0 = vertices[0].lon  # anchor longitude wrap on the first vertex
        self.frame = LocalFrame(GeoPosition(lat0, lon0))
        self._xy = to_local_array(self.vertices, self.frame)

    @classmethod
    def from_bbox(cls, lat_min: float, lon_min: float, lat_max: float, lon_max: float) -> "Region":
        return cls([
            GeoPosition(lat_min, lon_min),
            GeoPosition(lat_min, lon_max),
            GeoPosition(lat_max, lon_max),
            GeoPosition(lat_max, lon_min),
        ])

    def contains(self, p: GeoPosition) -> bool:
        """Even-odd ray-casting containment test."""
        x, y = to_local(p, self.frame)
        xy = self._xy
        n = len(xy)
        inside = False
        for i in range(n):
            x1, y1 = xy[i]
            x2, y2 = xy[(i + 1) % n]
            if (y1 > y) != (y2 > y):
                x_cross = x1 + (y - y1) / (y2 - y1) * (x2 - x1)
                if x < x_cross:
                    inside = not inside
        return inside

    def boundary_distance_m(self, p: GeoPosition) -> float:
        """Distance from ``p`` to the nearest boundary segment, in meters."""
        x, y = to_local(p, self.frame)
        xy = self._xy
        n = len(xy)
        best = math.inf
        for i in range(n):
            ax, ay = xy[i]
            bx, by = xy[(i + 1) % n]
            dx, dy = bx - ax, by - ay
            seg2 = dx * dx + dy * dy
            if seg2 == 0.0:
                t = 0.0
            else:
                t = min(1.0, max(0.0, ((x - ax) * dx + (y - ay) * dy) / seg2))
            ex, ey = ax + t * dx - x, ay + t * dy - y
            best = min(best, math.hypot(ex, ey))
        return best

    def area_m2(self) -> float:
        """Shoelace area in square meters."""
        xy = self._xy
        x, y = xy[:, 0], xy[:, 1]
        return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))

    def sample_uniform(self, rng: np.random.Generator, n: int) -> list:
        """Draw ``n`` points uniformly over the region (bbox rejection)."""
        xmin, ymin = self._xy.min(axis=0)
        xmax, ymax = self._xy.max(axis=0)
        out = []
        while len(out) < n:
            x = rng.uniform(xmin, xmax)
            y = rng.uniform(ymin, ymax)
            p = from_local(x, y, self.frame)
            if self.contains(p):
                out.append(p)
        return out
