import math

import numpy as np
import pytest

from seafusion.geo import GeoPosition, Region
from seafusion.records import GeoFix
from seafusion.simulator import (AisStreamConfig, AnomalyEvent, DarkPeriod,
                                 ScenarioConfig, SensorSimConfig,
                                 VesselSimConfig, default_confusion,
                                 emit_ais, emit_detections, generate_truth,
                                 make_feature_dataset, sample_extent,
                                 truth_from_jsonl, truth_to_jsonl)

A = GeoPosition(36.0, 14.5)
B = GeoPosition(36.2, 14.5)
C = GeoPosition(36.2, 14.75)


def _vessel(mmsi=215000001, route=(A, B), names=("A", "B"), sigma=0.02,
            dwell_s=0.0, speed=8.0, theta=5e-3, vessel_class="cargo"):
    return VesselSimConfig(mmsi=mmsi, vessel_class=vessel_class,
                           route=list(route), route_names=list(names),
                           speed_mps=speed, dwell_s=dwell_s,
                           theta_per_s=theta, sigma=sigma)


def _cfg(duration=3600.0, vessels=None, **kw):
    return ScenarioConfig(seed=5, duration_s=duration,
                          vessels=vessels or [_vessel()], **kw)


class TestGenerateTruth:
    def test_straight_leg_zero_noise_is_constant_velocity(self):
        cfg = _cfg(vessels=[_vessel(sigma=0.0)])
        vt = generate_truth(cfg).vessels[0]
        arrival = next(t for t, name in vt.waypoints if name == "B")
        upto = int(arrival)
        dy = np.diff(vt.states[:upto, 1])
        assert np.allclose(dy, 8.0, atol=1e-9)
        assert np.allclose(vt.states[:upto, 2], 0.0, atol=1e-9)

    def test_same_seed_bitwise_identical(self):
        cfg = _cfg()
        t1 = generate_truth(cfg)
        t2 = generate_truth(cfg)
        assert np.array_equal(t1.vessels[0].states, t2.vessels[0].states)

    def test_turn_switches_velocity_mean(self):
        cfg = _cfg(duration=9000.0, vessels=[_vessel(route=(A, B, C), names=("A", "B", "C"))])
        vt = generate_truth(cfg).vessels[0]
        t_turn = next(t for t, name in vt.waypoints if name == "B")
        before = vt.state_at(t_turn - 600.0)[2:]
        after = vt.state_at(t_turn + 600.0)[2:]   # ~3 reversion times later
        assert abs(before[0]) < 1.0 and before[1] > 6.0   # northbound
        assert after[0] > 6.5 and abs(after[1]) < 1.5      # eastbound

    def test_trajectory_continuity(self):
        cfg = _cfg()
        vt = generate_truth(cfg).vessels[0]
        steps = np.linalg.norm(np.diff(vt.states[:, :2], axis=0), axis=1)
        vmax = np.abs(vt.states[:, 2:]).max()
        assert steps.max() <= vmax * 1.0 + 5 * 0.02

    def test_anomaly_shifts_velocity(self):
        # long leg so the vessel is still en route after the anomaly ends
        far = GeoPosition(36.5, 14.5)
        ev = AnomalyEvent(215000001, 600.0, 1200.0, (0.0, 3.0))
        cfg = _cfg(vessels=[_vessel(sigma=0.0, route=(A, far))], anomalies=[ev])
        vt = generate_truth(cfg).vessels[0]
        assert vt.state_at(1500.0)[3] == pytest.approx(11.0, abs=0.2)
        assert vt.state_at(3300.0)[3] == pytest.approx(8.0, abs=0.2)

    def test_dwell_produces_port_stop(self):
        cfg = _cfg(vessels=[_vessel(dwell_s=900.0, sigma=0.0)])
        vt = generate_truth(cfg).vessels[0]
        assert np.allclose(vt.states[:900, 2:], 0.0)
        assert vt.state_at(1500.0)[3] > 6.0


class TestEmitAis:
    def test_full_dark_period_silences_vessel(self):
        ais = AisStreamConfig(mean_interval_s=120.0,
                              dark_periods=[DarkPeriod(0.0, 1e9)])
        cfg = _cfg(ais=ais)
        records = emit_ais(generate_truth(cfg), cfg)
        assert records == []

    def test_message_count_poisson(self):
        ais = AisStreamConfig(mean_interval_s=600.0, pos_noise_m=0.0)
        cfg = _cfg(duration=1e5, ais=ais)
        records = emit_ais(generate_truth(cfg), cfg)
        expected = 1e5 / 600.0
        assert abs(len(records) - expected) <= 3 * math.sqrt(expected)

    def test_clean_labels_when_no_dropout(self):
        ais = AisStreamConfig(mean_interval_s=300.0, mmsi_dropout=0.0, mislabel=0.0)
        cfg = _cfg(ais=ais)
        records = emit_ais(generate_truth(cfg), cfg)
        assert records
        assert all(r.mmsi == 215000001 for r in records)

    def test_dropout_and_mislabel_rates(self):
        ais = AisStreamConfig(mean_interval_s=50.0, mmsi_dropout=0.3, mislabel=0.2)
        cfg = _cfg(duration=2e5, ais=ais)
        records = emit_ais(generate_truth(cfg), cfg)
        n = len(records)
        n_none = sum(r.mmsi is None for r in records)
        n_wrong = sum(r.mmsi is not None and r.mmsi != 215000001 for r in records)
        assert abs(n_none / n - 0.3) < 0.05
        # mislabel applies to the non-dropped 70%
        assert abs(n_wrong / n - 0.7 * 0.2) < 0.04

    def test_min_interval_enforced(self):
        ais = AisStreamConfig(mean_interval_s=900.0, min_interval_s=600.0)
        cfg = _cfg(duration=5e4, ais=ais)
        records = emit_ais(generate_truth(cfg), cfg)
        gaps = np.diff([r.t for r in records])
        assert gaps.min() >= 600.0


def _fov():
    return Region.from_bbox(35.8, 14.2, 36.5, 15.0)


class TestEmitDetections:
    def test_perfect_sensor_counts(self):
        sensors = [SensorSimConfig("sar", _fov(), pd=1.0, clutter_rate=0.0,
                                   scan_epochs=[600.0, 1200.0])]
        vessels = [_vessel(), _vessel(mmsi=215000002, route=(B, C), names=("B", "C")),
                   _vessel(mmsi=215000003, route=(C, A), names=("C", "A"))]
        cfg = _cfg(vessels=vessels, sensors=sensors)
        dets = emit_detections(generate_truth(cfg), cfg)
        by_t = {}
        for d in dets:
            by_t.setdefault(d.t, []).append(d)
        assert {len(v) for v in by_t.values()} == {3}

    def test_detection_rate_binomial(self):
        epochs = list(np.arange(0.0, 3600.0, 3.6))
        sensors = [SensorSimConfig("sar", _fov(), pd=0.9, clutter_rate=0.0,
                                   scan_epochs=epochs)]
        cfg = _cfg(sensors=sensors)
        dets = emit_detections(generate_truth(cfg), cfg)
        frac = len(dets) / len(epochs)
        assert 0.87 <= frac <= 0.93

    def test_clutter_rate_poisson(self):
        epochs = list(np.arange(0.0, 3600.0, 3.6))
        sensors = [SensorSimConfig("sar", _fov(), pd=0.0, clutter_rate=10.0,
                                   scan_epochs=epochs)]
        cfg = _cfg(sensors=sensors)
        dets = emit_detections(generate_truth(cfg), cfg)
        mean_clutter = len(dets) / len(epochs)
        se = math.sqrt(10.0 / len(epochs))
        assert abs(mean_clutter - 10.0) < 3 * se
        for d in dets[:50]:
            assert _fov().contains(d.body.pos)

    def test_position_noise_covariance(self):
        epochs = list(np.arange(0.0, 3600.0, 1.8))
        sensors = [SensorSimConfig("sar", _fov(), pd=1.0, clutter_rate=0.0,
                                   noise_m=80.0, scan_epochs=epochs)]
        cfg = _cfg(vessels=[_vessel(sigma=0.0)], sensors=sensors)
        truth = generate_truth(cfg)
        dets = emit_detections(truth, cfg)
        from seafusion.geo import to_local
        errs = []
        vt = truth.vessels[0]
        for d in dets:
            xy = to_local(d.body.pos, truth.frame)
            st = vt.state_at(d.t)
            errs.append([xy[0] - st[0], xy[1] - st[1]])
        errs = np.asarray(errs)
        n = len(errs)
        se = 80.0**2 * math.sqrt(2.0 / (n - 1))
        assert abs(errs[:, 0].var() - 80.0**2) < 3 * se
        assert abs(errs[:, 1].var() - 80.0**2) < 3 * se

    def test_class_scores_from_confusion(self):
        conf = default_confusion(0.7)
        sensors = [SensorSimConfig("sar", _fov(), pd=1.0, clutter_rate=0.0,
                                   scan_epochs=[600.0], class_confusion=conf)]
        cfg = _cfg(sensors=sensors)
        dets = emit_detections(generate_truth(cfg), cfg)
        from seafusion.classifier import CATEGORIES
        cargo = CATEGORIES.index("cargo")
        assert len(dets) == 1
        assert np.allclose(dets[0].class_scores, conf[cargo])


class TestSizeModel:
    def test_sample_extent_positive(self):
        rng = np.random.default_rng(0)
        for name in ("cargo", "pleasure", "tug_towing"):
            for _ in range(100):
                length, width = sample_extent(name, rng)
                assert length > 0 and width > 0 and length >= width

    def test_feature_dataset_labels(self):
        data = make_feature_dataset(500, seed=1)
        labels = {c for _, c in data}
        assert labels <= set(range(14))
        assert len(labels) == 14


class TestTruthJsonl:
    def test_round_trip_states(self):
        cfg = _cfg()
        truth = generate_truth(cfg)
        lines = truth_to_jsonl(truth, stride=10)
        back = truth_from_jsonl(lines, truth.frame)
        vt0, vt1 = truth.vessels[0], back.vessels[0]
        assert vt1.mmsi == vt0.mmsi
        for t in (0.0, 600.0, 3000.0):
            assert np.allclose(vt1.state_at(t)[:2], vt0.state_at(t)[:2], atol=1.0)


class TestConfigJson:
    def test_from_json(self):
        doc = """
        {
          "seed": 9, "duration_s": 7200,
          "nodes": {"A": [36.0, 14.5], "B": [36.2, 14.5]},
          "edges": [["A", "B"]],
          "defaults": {"speed_mps": 7.0, "theta_per_s": 0.004, "sigma": 0.03},
          "vessels": [{"mmsi": 215000009, "class": "tanker", "route": ["A", "B"]}],
          "ais": {"mean_interval_s": 300, "dark_periods": [{"start_s": 0, "duration_s": 600}]},
          "sensors": [{"sensor_id": "sar1", "scan_interval_s": 1800, "pd": 0.85,
                       "clutter_rate": 2.0, "fov": {"bbox": [35.8, 14.2, 36.5, 15.0]},
                       "class_confusion": "default"}],
          "anomalies": [{"mmsi": 215000009, "t_s": 1000, "duration_s": 500,
                         "delta_mps": [1.0, -1.0]}]
        }
        """
        cfg = ScenarioConfig.from_json(doc)
        assert cfg.seed == 9
        assert cfg.vessels[0].speed_mps == 7.0
        assert cfg.vessels[0].vessel_class == "tanker"
        assert cfg.sensors[0].class_confusion is not None
        assert cfg.anomalies[0].delta_mps == (1.0, -1.0)
        truth = generate_truth(cfg)
        assert truth.vessels[0].mmsi == 215000009

    def test_validates_anomaly_window(self):
        with pytest.raises(ValueError):
            _cfg(anomalies=[AnomalyEvent(215000001, 1e9, 10.0, (1.0, 0.0))])
