import math

import numpy as np
import pytest

from seafusion.geo import GeoPosition, LocalFrame, Region, from_local
from seafusion.motion import ModelSet, NcvModel, OUParams, OuModel, ou_transition
from seafusion.records import GeoFix
from seafusion.simulator import (ScenarioConfig, SensorSimConfig,
                                 VesselSimConfig, emit_detections,
                                 generate_truth)
from seafusion.tracker import (BirthConfig, Measurement, PotentialTarget,
                               SensorModel, Tracker, TrackerConfig,
                               association_weights, birth, estimate,
                               expand_label_universe, group_scans, predict,
                               prune, route_model_set, spa_associate,
                               systematic_resample, update)
from seafusion.traffic import EdgeStats, TrafficGraph, WaypointCluster, WaypointKind

FRAME = LocalFrame(GeoPosition(36.0, 14.5))


def _target(tid=1, x=0.0, y=0.0, vx=0.0, vy=0.0, r=0.9, n=500, spread=0.0,
            n_models=1, rng=None):
    rng = rng or np.random.default_rng(0)
    particles = np.tile([x, y, vx, vy], (n, 1)).astype(float)
    if spread > 0:
        particles[:, :2] += rng.normal(0, spread, (n, 2))
    return PotentialTarget(
        id=tid, particles=particles, weights=np.full(n, 1.0 / n),
        existence=r, dm_dist=np.full(n_models, 1.0 / n_models),
        label_dist={None: 1.0}, class_dist=np.full(14, 1.0 / 14),
        last_update=0.0)


def _meas(x, y, mmsi=None, scores=None, sensor_id="s", t=0.0):
    return Measurement(t=t, sensor_id=sensor_id,
                       body=GeoFix(from_local(x, y, FRAME)),
                       mmsi=mmsi, class_scores=scores)


def _sensor(pd=0.9, clutter_rate=1.0, area=1e8, noise=50.0, **kw):
    return SensorModel.geofix("s", pd, clutter_rate, area, noise, **kw)


class TestPredict:
    def test_deterministic_translation_with_zero_noise(self):
        tgt = _target(vx=2.0, vy=-1.0)
        before = tgt.particles.copy()
        predict([tgt], ModelSet.single(NcvModel(0.0)), dt=10.0,
                p_survive=0.99, rng=np.random.default_rng(0))
        assert np.allclose(tgt.particles[:, 0], before[:, 0] + 20.0)
        assert np.allclose(tgt.particles[:, 1], before[:, 1] - 10.0)
        assert tgt.existence == pytest.approx(0.9 * 0.99)

    def test_identity_transition_keeps_dm_dist(self):
        ms = ModelSet([NcvModel(0.1), NcvModel(0.2)], np.eye(2))
        tgt = _target(n_models=2)
        tgt.dm_dist = np.array([0.7, 0.3])
        predict([tgt], ms, dt=5.0, p_survive=1.0, rng=np.random.default_rng(1))
        assert np.allclose(tgt.dm_dist, [0.7, 0.3])

    def test_markov_step_of_dm_dist(self):
        T = np.array([[0.8, 0.2], [0.5, 0.5]])
        ms = ModelSet([NcvModel(0.1), NcvModel(0.2)], T)
        tgt = _target(n_models=2)
        tgt.dm_dist = np.array([1.0, 0.0])
        predict([tgt], ms, dt=5.0, p_survive=1.0, rng=np.random.default_rng(1))
        assert np.allclose(tgt.dm_dist, [0.8, 0.2])

    def test_ou_sampling_matches_moments(self):
        params = OUParams([1.0, 0.5], theta=2e-3, sigma=0.1)
        n = 100_000
        tgt = _target(vx=3.0, vy=-1.0, n=n)
        from seafusion.motion import KinematicState
        mean, cov = ou_transition(KinematicState(0, 0, 3.0, -1.0), params, 400.0)
        predict([tgt], ModelSet.single(OuModel(params)), dt=400.0,
                p_survive=1.0, rng=np.random.default_rng(3))
        se = np.sqrt(np.diag(cov) / n)
        assert np.all(np.abs(tgt.particles.mean(axis=0) - mean) < 3 * se)
        sample_cov = np.cov(tgt.particles.T)
        for i in range(4):
            se_v = cov[i, i] * math.sqrt(2.0 / (n - 1))
            assert abs(sample_cov[i, i] - cov[i, i]) < 3 * se_v

    def test_rejects_bad_dt(self):
        with pytest.raises(ValueError):
            predict([_target()], ModelSet.single(NcvModel(0.0)), 0.0, 0.99,
                    np.random.default_rng(0))


class TestUpdate:
    def test_uninformative_sensor_keeps_target(self):
        tgt = _target(r=0.7, spread=100.0)
        sensor = _sensor(pd=1e-9)
        w_before = tgt.weights.copy()
        problem = association_weights([tgt], [_meas(0.0, 0.0)], sensor, FRAME)
        spa = spa_associate(problem)
        update([tgt], problem, spa, t=1.0, rng=np.random.default_rng(0))
        assert tgt.existence == pytest.approx(0.7, abs=1e-6)
        assert np.allclose(tgt.weights, w_before, atol=1e-9)

    def test_existence_rises_on_detection(self):
        tgt = _target(r=0.3, spread=50.0)
        sensor = _sensor(pd=0.9, clutter_rate=0.1)
        problem = association_weights([tgt], [_meas(0.0, 0.0)], sensor, FRAME)
        spa = spa_associate(problem)
        update([tgt], problem, spa, t=1.0, rng=np.random.default_rng(0))
        assert tgt.existence > 0.95

    def test_existence_drops_on_miss(self):
        tgt = _target(r=0.9, spread=50.0)
        sensor = _sensor(pd=0.9, clutter_rate=0.1)
        problem = association_weights([tgt], [], sensor, FRAME)
        spa = spa_associate(problem)
        update([tgt], problem, spa, t=1.0, rng=np.random.default_rng(0))
        expected = 0.9 * 0.1 / (1 - 0.9 * 0.9)
        assert tgt.existence == pytest.approx(expected, rel=1e-6)

    def test_label_collapses_with_certain_association(self):
        mmsi = 215000042
        tgt = _target(r=0.95, spread=30.0)
        tgt.label_dist = {mmsi: 0.95, None: 0.05}
        sensor = _sensor(pd=0.95, clutter_rate=0.01, noise=30.0, label_error=0.0)
        for t in (1.0, 2.0):
            problem = association_weights([tgt], [_meas(0.0, 0.0, mmsi=mmsi)],
                                          sensor, FRAME, universe_size=2)
            spa = spa_associate(problem)
            update([tgt], problem, spa, t=t, rng=np.random.default_rng(0))
        assert tgt.map_label() == mmsi
        assert tgt.label_dist[mmsi] > 0.97

    def test_label_transfer_to_unlabeled_target(self):
        mmsi = 215000077
        tgt = _target(r=0.95, spread=30.0)
        sensor = _sensor(pd=0.95, clutter_rate=0.01, noise=30.0, label_error=0.0)
        for t in (1.0, 2.0, 3.0):
            meas = [_meas(0.0, 0.0, mmsi=mmsi)]
            expand_label_universe([tgt], meas, universe_size=2)
            problem = association_weights([tgt], meas, sensor, FRAME,
                                          universe_size=2)
            spa = spa_associate(problem)
            update([tgt], problem, spa, t=t, rng=np.random.default_rng(0))
        assert tgt.map_label() == mmsi

    def test_class_distribution_update(self):
        from seafusion.simulator import default_confusion
        conf = default_confusion(0.7)
        cargo = 2
        scores = conf[cargo]
        tgt = _target(r=0.95, spread=30.0)
        sensor = _sensor(pd=0.95, clutter_rate=0.01, noise=30.0,
                         class_confusion=conf)
        for t in (1.0, 2.0, 3.0, 4.0):
            problem = association_weights([tgt], [_meas(0.0, 0.0, scores=scores)],
                                          sensor, FRAME)
            spa = spa_associate(problem)
            update([tgt], problem, spa, t=t, rng=np.random.default_rng(1))
        assert int(np.argmax(tgt.class_dist)) in (2, 11)  # cargo band
        assert tgt.class_dist[2] + tgt.class_dist[11] > 0.8
        tgt.validate()

    def test_degenerate_flagged(self):
        tgt = _target(r=0.9, spread=1.0)
        sensor = _sensor(pd=0.9, noise=1.0)
        problem = association_weights([tgt], [_meas(1e5, 1e5)], sensor, FRAME)
        spa = spa_associate(problem)
        spa.marginals[0] = np.array([0.0, 1.0])  # force the impossible match
        update([tgt], problem, spa, t=1.0, rng=np.random.default_rng(0))
        assert tgt.degenerate
        assert tgt.existence == 0.0
        assert prune([tgt], r_prune=1e-3) == []

    def test_invariants_after_update(self):
        rng = np.random.default_rng(5)
        tgt = _target(r=0.5, spread=80.0)
        tgt.label_dist = {215000001: 0.5, None: 0.5}
        sensor = _sensor()
        problem = association_weights(
            [tgt], [_meas(20.0, -10.0, mmsi=215000001), _meas(400.0, 0.0)],
            sensor, FRAME, universe_size=2)
        spa = spa_associate(problem)
        update([tgt], problem, spa, t=1.0, rng=rng)
        tgt.validate()


class TestSystematicResample:
    def test_preserves_strong_mode(self):
        rng = np.random.default_rng(0)
        w = np.zeros(100)
        w[7] = 1.0
        idx = systematic_resample(w, rng)
        assert np.all(idx == 7)

    def test_counts_within_one_of_expectation(self):
        # systematic resampling replicates index i either floor(n*w_i) or
        # ceil(n*w_i) times
        rng = np.random.default_rng(1)
        w = rng.random(50)
        w /= w.sum()
        idx = systematic_resample(w, rng)
        counts = np.bincount(idx, minlength=50)
        assert counts.sum() == 50
        assert np.all(np.abs(counts - 50 * w) <= 1.0)


class TestBirth:
    CFG = BirthConfig(r0=0.3, min_unassigned=0.5, vel_std=5.0, label_delta=0.05)

    def _birth(self, measurements, non_target, sensor=None):
        return birth(measurements, np.asarray(non_target), sensor or _sensor(),
                     FRAME, self.CFG, n_models=2, n_particles=200, next_id=10,
                     t=5.0, rng=np.random.default_rng(0))

    def test_explained_measurement_no_birth(self):
        tgt = _target(r=1.0, spread=20.0)
        sensor = _sensor(pd=1.0, clutter_rate=0.01, noise=20.0)
        meas = [_meas(0.0, 0.0)]
        problem = association_weights([tgt], meas, sensor, FRAME)
        spa = spa_associate(problem)
        assert self._birth(meas, spa.non_target, sensor) == []

    def test_orphan_births_one_target(self):
        meas = [_meas(5000.0, 5000.0)]
        born = self._birth(meas, [0.99])
        assert len(born) == 1
        tgt = born[0]
        assert tgt.id == 10
        assert tgt.existence == pytest.approx(0.3 * 0.99)
        assert np.allclose(tgt.dm_dist, 0.5)
        center = tgt.particles[:, :2].mean(axis=0)
        assert np.linalg.norm(center - [5000.0, 5000.0]) < 20.0
        tgt.validate()

    def test_ais_orphan_seeds_label(self):
        meas = [_meas(0.0, 0.0, mmsi=215000009)]
        born = self._birth(meas, [1.0])
        assert born[0].label_dist[215000009] == pytest.approx(0.95)
        assert born[0].label_dist[None] == pytest.approx(0.05)

    def test_class_scores_seed_class_dist(self):
        scores = np.zeros(14)
        scores[2] = 0.7
        scores[11] = 0.3
        born = self._birth([_meas(0.0, 0.0, scores=scores)], [1.0])
        assert np.allclose(born[0].class_dist, scores)


class TestRouteModelSet:
    def _graph(self, edges, n_nodes):
        nodes = [WaypointCluster(id=i, members=(),
                                 centroid=from_local(20e3 * i, 0.0, FRAME),
                                 kind=WaypointKind.NAVIGATIONAL,
                                 radius_m=500.0, n_members=3)
                 for i in range(n_nodes)]
        return TrafficGraph(nodes, edges, FRAME)

    def test_single_edge_two_models(self):
        g = self._graph([EdgeStats(0, 1, 3, 5.0, math.pi / 2, 0.1, 0.05)], 2)
        ms = route_model_set(g, theta=2e-3, sigma=0.05)
        assert len(ms) == 2
        assert isinstance(ms.models[0], OuModel)
        assert isinstance(ms.models[1], NcvModel)

    def test_east_edge_velocity(self):
        g = self._graph([EdgeStats(0, 1, 3, 5.0, math.pi / 2, 0.1, 0.05)], 2)
        ms = route_model_set(g, theta=2e-3, sigma=0.05)
        assert np.allclose(ms.models[0].params.v_mean, [5.0, 0.0], atol=1e-12)

    def test_corridor_sparsity(self):
        # edges 0->1, 1->2, plus an isolated pair 3->4
        nodes = 5
        edges = [EdgeStats(0, 1, 2, 5.0, 0.0, 0.0, 0.0),
                 EdgeStats(1, 2, 2, 5.0, 0.0, 0.0, 0.0),
                 EdgeStats(3, 4, 2, 5.0, 0.0, 0.0, 0.0)]
        ms = route_model_set(self._graph(edges, nodes), theta=2e-3, sigma=0.05)
        T = ms.transition_matrix
        assert T.shape == (4, 4)
        assert T[0, 1] > 0 and T[1, 0] > 0          # share node 1
        assert T[0, 2] == 0 and T[2, 0] == 0        # disjoint edges
        assert np.all(T[:, 3] > 0)                  # fallback reachable
        assert np.allclose(T.sum(axis=1), 1.0, atol=1e-12)

    def test_empty_graph_rejected(self):
        with pytest.raises(ValueError):
            route_model_set(self._graph([], 2), 1e-3, 0.1)


class TestEstimatePrune:
    def test_confident_target_emitted(self):
        tgt = _target(r=0.99, x=100.0, y=-50.0, vx=1.0)
        [est] = estimate([tgt], r_detect=0.5, t=7.0)
        assert est.px == pytest.approx(100.0)
        assert est.existence == 0.99
        assert est.mmsi is None

    def test_weak_target_not_emitted(self):
        assert estimate([_target(r=0.2)], r_detect=0.5, t=0.0) == []

    def test_prune_threshold(self):
        weak = _target(tid=1, r=1e-4)
        strong = _target(tid=2, r=0.4)
        kept = prune([weak, strong], r_prune=1e-3)
        assert [t.id for t in kept] == [2]


class TestGroupScans:
    def test_groups_by_time_and_sensor(self):
        ms = [_meas(0, 0, t=2.0), _meas(1, 1, t=1.0),
              _meas(2, 2, t=2.0), _meas(3, 3, t=2.0, sensor_id="other")]
        groups = list(group_scans(ms))
        keys = [k for k, _ in groups]
        assert keys == [(1.0, "s"), (2.0, "other"), (2.0, "s")]
        assert len(groups[2][1]) == 2


class TestTrackerIntegration:
    def _scenario(self):
        A, B = GeoPosition(36.0, 14.4), GeoPosition(36.0, 14.8)
        C, D = GeoPosition(36.1, 14.4), GeoPosition(36.1, 14.8)
        E, F = GeoPosition(35.9, 14.4), GeoPosition(35.9, 14.8)
        fov = Region.from_bbox(35.8, 14.3, 36.2, 14.9)
        sensors = [SensorSimConfig("sar", fov, pd=0.95, clutter_rate=1.0,
                                   noise_m=60.0, scan_interval_s=60.0,
                                   first_scan_s=60.0)]
        vessels = [
            VesselSimConfig(215000001, "cargo", [A, B], ["A", "B"], 8.0, 0.0, 4e-3, 0.02),
            VesselSimConfig(215000002, "tanker", [C, D], ["C", "D"], 7.0, 0.0, 4e-3, 0.02),
            VesselSimConfig(215000003, "fishing", [F, E], ["F", "E"], 6.0, 0.0, 4e-3, 0.02),
        ]
        return ScenarioConfig(seed=11, duration_s=2400.0, vessels=vessels,
                              sensors=sensors)

    def test_cardinality_reaches_truth(self):
        cfg = self._scenario()
        truth = generate_truth(cfg)
        dets = emit_detections(truth, cfg)
        sensors = {"sar": SensorModel.geofix(
            "sar", pd=0.95, clutter_rate=1.0,
            fov_area_m2=cfg.sensors[0].fov.area_m2(), noise_std_m=60.0)}
        tracker = Tracker(sensors, ModelSet.single(NcvModel(0.05)), truth.frame,
                          TrackerConfig(n_particles=500), seed=4)
        counts = []
        for (t, sid), scan in group_scans(map(Measurement.from_detection, dets)):
            est = tracker.process_scan(t, sid, scan)
            counts.append(len(est))
        steady = counts[4:]
        frac = np.mean([c == 3 for c in steady])
        assert frac >= 0.9

    def test_out_of_sequence_rejected(self):
        sensors = {"s": _sensor()}
        tracker = Tracker(sensors, ModelSet.single(NcvModel(0.05)), FRAME)
        tracker.process_scan(10.0, "s", [_meas(0, 0, t=10.0)])
        with pytest.raises(ValueError):
            tracker.process_scan(5.0, "s", [_meas(0, 0, t=5.0)])

    def test_unknown_sensor_rejected(self):
        tracker = Tracker({"s": _sensor()}, ModelSet.single(NcvModel(0.05)), FRAME)
        with pytest.raises(KeyError):
            tracker.process_scan(0.0, "nope", [])

    def test_ais_only_labels_correct_after_second_message(self):
        # two vessels, clean alternating AIS; labels right from message two on
        sensors = {"ais": _sensor(pd=0.95, clutter_rate=0.001, noise=30.0)}
        sensors["ais"].sensor_id = "ais"
        tracker = Tracker(sensors, ModelSet.single(NcvModel(0.05)), FRAME,
                          TrackerConfig(n_particles=400), seed=2)
        a, b = 215000011, 215000022
        seen = {a: 0, b: 0}
        for step in range(8):
            t = 30.0 * (step + 1)
            mmsi = a if step % 2 == 0 else b
            x = 0.0 if mmsi == a else 20000.0
            est = tracker.process_scan(t, "ais", [
                Measurement(t=t, sensor_id="ais",
                            body=GeoFix(from_local(x, 0.0, FRAME)), mmsi=mmsi)])
            seen[mmsi] += 1
            if min(seen.values()) >= 2:
                claimed = {e.mmsi for e in est}
                assert claimed == {a, b}

    def test_scan_with_no_measurements(self):
        tracker = Tracker({"s": _sensor()}, ModelSet.single(NcvModel(0.05)), FRAME)
        tracker.process_scan(1.0, "s", [_meas(0, 0, t=1.0)])
        est = tracker.process_scan(2.0, "s", [])
        assert isinstance(est, list)
