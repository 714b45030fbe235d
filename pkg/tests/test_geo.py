import math

import numpy as np
import pytest

from seafusion.geo import (EARTH_RADIUS_M, GeoPosition, LocalFrame, Region,
                           from_local, to_local)


def test_origin_maps_to_zero():
    frame = LocalFrame(GeoPosition(36.0, 14.5))
    assert to_local(GeoPosition(36.0, 14.5), frame) == (0.0, 0.0)


def test_latitude_step_meters():
    # 0.01 deg of latitude = 0.01 * pi/180 * R
    frame = LocalFrame(GeoPosition(36.0, 14.5))
    x, y = to_local(GeoPosition(36.01, 14.5), frame)
    expected = 0.01 * math.pi / 180.0 * EARTH_RADIUS_M
    assert x == pytest.approx(0.0, abs=1e-9)
    assert y == pytest.approx(expected, rel=1e-12)
    assert y == pytest.approx(1111.95, abs=0.01)


def test_round_trip_within_100km():
    frame = LocalFrame(GeoPosition(36.0, 14.5))
    rng = np.random.default_rng(7)
    for _ in range(1000):
        x = rng.uniform(-100e3, 100e3)
        y = rng.uniform(-100e3, 100e3)
        p = from_local(x, y, frame)
        x2, y2 = to_local(p, frame)
        p2 = from_local(x2, y2, frame)
        assert abs(p2.lat - p.lat) < 1e-9
        assert abs(p2.lon - p.lon) < 1e-9


def test_latitude_out_of_range_rejected():
    with pytest.raises(ValueError):
        GeoPosition(95.0, 10.0)
    with pytest.raises(ValueError):
        GeoPosition(float("nan"), 10.0)


def test_longitude_normalized():
    assert GeoPosition(0.0, 190.0).lon == pytest.approx(-170.0)
    assert GeoPosition(0.0, -180.0).lon == -180.0
    assert GeoPosition(0.0, 180.0).lon == -180.0
    assert GeoPosition(0.0, 540.0).lon == pytest.approx(-180.0)


class TestRegion:
    def _square(self, half_km=10.0):
        # roughly half_km x half_km square about (36, 14.5)
        d = half_km * 1000.0 / (math.pi / 180.0 * EARTH_RADIUS_M)
        return Region([
            GeoPosition(36.0 - d, 14.5 - d),
            GeoPosition(36.0 - d, 14.5 + d),
            GeoPosition(36.0 + d, 14.5 + d),
            GeoPosition(36.0 + d, 14.5 - d),
        ])

    def test_contains(self):
        reg = self._square()
        assert reg.contains(GeoPosition(36.0, 14.5))
        assert not reg.contains(GeoPosition(37.0, 14.5))

    def test_area(self):
        reg = self._square(half_km=10.0)
        # 20 km x ~20 km; lon scale shrinks the east-west extent by cos(lat)
        area = reg.area_m2()
        expected = 20e3 * 20e3 * math.cos(math.radians(36.0))
        assert area == pytest.approx(expected, rel=1e-3)

    def test_boundary_distance(self):
        reg = self._square(half_km=10.0)
        d = reg.boundary_distance_m(GeoPosition(36.0, 14.5))
        # nearest edge is east/west, at 10 km of longitude scaled by cos(lat)
        assert d == pytest.approx(10e3 * math.cos(math.radians(36.0)), rel=1e-3)

    def test_sampling_stays_inside(self):
        reg = self._square()
        rng = np.random.default_rng(3)
        for p in reg.sample_uniform(rng, 200):
            assert reg.contains(p)
