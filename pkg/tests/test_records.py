import json
import math

import numpy as np
import pytest

from seafusion.geo import GeoPosition
from seafusion.records import (AISRecord, Detection, GeoFix, RangeBearing,
                               Track, ais_to_json, assemble_tracks,
                               detection_to_json, parse_ais, parse_detections)


def _random_ais(rng) -> AISRecord:
    return AISRecord(
        t=float(rng.uniform(0, 1e6)),
        pos=GeoPosition(float(rng.uniform(-80, 80)), float(rng.uniform(-179, 179))),
        sog=float(rng.uniform(0, 15)) if rng.random() < 0.8 else None,
        cog=float(rng.uniform(0, 2 * math.pi)) if rng.random() < 0.8 else None,
        mmsi=int(rng.integers(100000000, 999999999)) if rng.random() < 0.7 else None,
        ship_type=int(rng.integers(20, 90)) if rng.random() < 0.5 else None,
        length=float(rng.uniform(5, 300)) if rng.random() < 0.5 else None,
        width=float(rng.uniform(2, 40)) if rng.random() < 0.5 else None,
    )


def _random_detection(rng) -> Detection:
    if rng.random() < 0.5:
        body = GeoFix(GeoPosition(float(rng.uniform(-80, 80)), float(rng.uniform(-179, 179))))
    else:
        body = RangeBearing(
            rho=float(rng.uniform(0, 5e4)),
            theta=float(rng.uniform(0, 2 * math.pi)),
            sensor_pos=GeoPosition(float(rng.uniform(-80, 80)), float(rng.uniform(-179, 179))),
        )
    scores = None
    if rng.random() < 0.5:
        scores = rng.random(14)
        scores /= scores.sum()
    extent = (float(rng.uniform(5, 300)), float(rng.uniform(2, 40))) if rng.random() < 0.5 else None
    return Detection(t=float(rng.uniform(0, 1e6)), sensor_id="s1", body=body,
                     extent=extent, class_scores=scores)


class TestParseAis:
    def test_empty_input(self):
        records, diags = parse_ais([])
        assert records == [] and diags == []

    def test_out_of_range_latitude_diagnosed(self):
        line = json.dumps({"t": 0, "lat": 95.0, "lon": 10.0})
        records, diags = parse_ais([line])
        assert records == []
        assert len(diags) == 1 and diags[0].line_no == 1
        assert "latitude" in diags[0].reason

    def test_mixed_valid_and_malformed(self):
        rng = np.random.default_rng(0)
        lines = [ais_to_json(_random_ais(rng)) for _ in range(3)]
        lines.insert(2, "{not json")
        records, diags = parse_ais(lines)
        assert len(records) == 3
        assert len(diags) == 1 and diags[0].line_no == 3

    def test_knots_converted(self):
        line = json.dumps({"t": 0, "lat": 0, "lon": 0, "sog": 10.0, "sog_unit": "kn", "cog_deg": 90.0})
        [rec], diags = parse_ais([line])
        assert not diags
        assert rec.sog == pytest.approx(10 * 1852.0 / 3600.0)
        assert rec.cog == pytest.approx(math.pi / 2)

    def test_round_trip_random_records(self):
        rng = np.random.default_rng(42)
        for _ in range(300):
            rec = _random_ais(rng)
            [back], diags = parse_ais([ais_to_json(rec)])
            assert not diags
            assert back.t == rec.t
            assert back.pos.lat == pytest.approx(rec.pos.lat, abs=1e-12)
            assert back.pos.lon == pytest.approx(rec.pos.lon, abs=1e-12)
            assert back.mmsi == rec.mmsi
            assert back.ship_type == rec.ship_type
            if rec.sog is None:
                assert back.sog is None
            else:
                assert back.sog == pytest.approx(rec.sog, rel=1e-12)
            if rec.cog is None:
                assert back.cog is None
            else:
                assert back.cog == pytest.approx(rec.cog, abs=1e-12)


class TestParseDetections:
    def test_geofix_round_trip(self):
        det = Detection(t=5.0, sensor_id="sar", body=GeoFix(GeoPosition(36.0, 14.5)))
        [back], diags = parse_detections([detection_to_json(det)])
        assert not diags
        assert back.sensor_id == "sar"
        assert back.body.pos.lat == pytest.approx(36.0)

    def test_round_trip_random(self):
        rng = np.random.default_rng(17)
        for _ in range(200):
            det = _random_detection(rng)
            [back], diags = parse_detections([detection_to_json(det)])
            assert not diags
            assert type(back.body) is type(det.body)
            if isinstance(det.body, RangeBearing):
                assert back.body.rho == pytest.approx(det.body.rho, rel=1e-12)
                assert back.body.theta == pytest.approx(det.body.theta, abs=1e-12)
            if det.class_scores is None:
                assert back.class_scores is None
            else:
                assert np.allclose(back.class_scores, det.class_scores, atol=1e-12)

    def test_unnormalized_scores_diagnosed(self):
        scores = [0.9 / 14] * 14
        line = json.dumps({"t": 0, "sensor_id": "s", "kind": "geofix",
                           "lat": 0, "lon": 0, "class_scores": scores})
        records, diags = parse_detections([line])
        assert records == [] and len(diags) == 1
        assert "sum to 1" in diags[0].reason

    def test_negative_range_diagnosed(self):
        line = json.dumps({"t": 0, "sensor_id": "s", "kind": "rangebearing",
                           "rho": -5.0, "theta_deg": 10.0,
                           "sensor_lat": 0.0, "sensor_lon": 0.0})
        records, diags = parse_detections([line])
        assert records == [] and len(diags) == 1


class TestAssembleTracks:
    def _rec(self, t, mmsi=215000001):
        return AISRecord(t=t, pos=GeoPosition(36.0, 14.5), sog=5.0, cog=0.0, mmsi=mmsi)

    def test_no_gaps_single_track(self):
        records = [self._rec(t) for t in (0.0, 100.0, 200.0)]
        tracks = assemble_tracks(records, gap_threshold=3600.0)
        assert len(tracks) == 1
        assert len(tracks[0].points) == 3

    def test_six_hour_gap_splits_at_five_hour_threshold(self):
        records = [self._rec(0.0), self._rec(3600.0), self._rec(3600.0 + 6 * 3600.0)]
        tracks = assemble_tracks(records, gap_threshold=5 * 3600.0)
        assert len(tracks) == 2
        assert [len(t.points) for t in tracks] == [2, 1]

    def test_interleaved_vessels(self):
        a, b = 215000001, 215000002
        records = [self._rec(0.0, a), self._rec(10.0, b), self._rec(20.0, a), self._rec(30.0, b)]
        tracks = assemble_tracks(records, gap_threshold=1e6)
        assert len(tracks) == 2
        by_mmsi = {t.mmsi: t for t in tracks}
        assert [p.t for p in by_mmsi[a].points] == [0.0, 20.0]
        assert [p.t for p in by_mmsi[b].points] == [10.0, 30.0]

    def test_coverage_and_disjointness(self):
        rng = np.random.default_rng(9)
        mmsis = [215000001, 215000002, 215000003]
        records = []
        used = set()
        for _ in range(200):
            m = mmsis[rng.integers(0, 3)] if rng.random() < 0.8 else None
            t = float(rng.integers(0, 100000))
            if (m, t) in used:
                continue
            used.add((m, t))
            records.append(self._rec(t, m) if m else AISRecord(t=t, pos=GeoPosition(0, 0)))
        tracks = assemble_tracks(records, gap_threshold=10000.0)
        seen = []
        for tr in tracks:
            for p in tr.points:
                seen.append((tr.mmsi, p.t))
        labeled = [(r.mmsi, r.t) for r in records if r.mmsi is not None]
        assert sorted(seen) == sorted(labeled)
        assert len(set(seen)) == len(seen)

    def test_rejects_bad_threshold(self):
        with pytest.raises(ValueError):
            assemble_tracks([], gap_threshold=0.0)


class TestTrackInvariants:
    def test_strictly_increasing_required(self):
        p1 = AISRecord(t=0.0, pos=GeoPosition(0, 0), mmsi=215000001)
        p2 = AISRecord(t=0.0, pos=GeoPosition(0, 0), mmsi=215000001)
        with pytest.raises(ValueError):
            Track(215000001, (p1, p2))

    def test_single_mmsi_required(self):
        p1 = AISRecord(t=0.0, pos=GeoPosition(0, 0), mmsi=215000001)
        p2 = AISRecord(t=1.0, pos=GeoPosition(0, 0), mmsi=215000002)
        with pytest.raises(ValueError):
            Track(215000001, (p1, p2))

    def test_bad_mmsi_rejected(self):
        with pytest.raises(ValueError):
            AISRecord(t=0.0, pos=GeoPosition(0, 0), mmsi=12345)
