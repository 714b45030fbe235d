"""Scenario simulator: ground-truth trajectories, AIS streams, sensor scans.

Vessels follow node-to-node routes with mean-reverting velocity whose
long-run mean switches at waypoints (optionally dwelling at the route ends
with zero mean velocity, which is what makes port calls detectable).  AIS
messages arrive with exponential inter-arrival times, optionally gapped by
dark periods, dropped or mislabeled MMSIs; sensors scan on a fixed schedule
with missed detections, Gaussian measurement noise, and Poisson clutter.

All outputs are pure functions of (config, seed): every vessel and sensor
stream draws from its own spawned child generator.
"""

from __future__ import annotations

import json
import math
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .classifier import CATEGORIES, FeatureVector
from .geo import GeoPosition, LocalFrame, Region, from_local, to_local
from .motion import ou_axis_factors
from .records import AISRecord, Detection, GeoFix, RangeBearing
from .traffic import course_of

# ---------------------------------------------------------------------------
# Class-conditional size model (synthetic defaults: log-normal length and
# aspect per category, grouped into six size-separable bands)

SIZE_MODEL: Dict[str, Tuple[float, float, float, float]] = {
    # category: (median length m, log-std, median aspect, log-std)
    "pleasure": (8.0, 0.08, 3.4, 0.06),
    "pilot_boat": (8.0, 0.08, 2.8, 0.06),
    "fishing": (18.0, 0.08, 3.6, 0.06),
    "search_and_rescue": (18.0, 0.08, 2.9, 0.06),
    "high_speed_craft": (40.0, 0.08, 5.2, 0.06),
    "tug_towing": (40.0, 0.08, 2.6, 0.06),
    "anti_pollution_law": (40.0, 0.08, 3.8, 0.06),
    "dredging_military_sailboat": (90.0, 0.08, 4.2, 0.06),
    "other_unknown_reserved": (90.0, 0.08, 5.2, 0.06),
    "wing_in_ground": (90.0, 0.08, 6.6, 0.06),
    "passenger": (160.0, 0.08, 5.2, 0.06),
    "medical_non_conflict": (160.0, 0.08, 6.6, 0.06),
    "cargo": (280.0, 0.08, 6.5, 0.06),
    "tanker": (280.0, 0.08, 5.4, 0.06),
}

# size-separable groups: categories sharing a median length band
SIZE_GROUP: Dict[str, int] = {
    name: rank for rank, med in enumerate(sorted({v[0] for v in SIZE_MODEL.values()}))
    for name, v in SIZE_MODEL.items() if v[0] == med
}
N_SIZE_GROUPS = len(set(SIZE_GROUP.values()))


def sample_extent(category: str, rng: np.random.Generator) -> Tuple[float, float]:
    """Draw a (length, width) pair from the category's size distribution."""
    med_l, sl, med_a, sa = SIZE_MODEL[category]
    length = med_l * math.exp(sl * rng.standard_normal())
    aspect = max(1.0, med_a * math.exp(sa * rng.standard_normal()))
    return length, length / aspect


def make_feature_dataset(n: int, seed: int) -> List[Tuple[FeatureVector, int]]:
    """Uniformly-sampled labeled features for classifier training/testing."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        ci = int(rng.integers(0, len(CATEGORIES)))
        length, width = sample_extent(CATEGORIES[ci], rng)
        out.append((FeatureVector(length, width), ci))
    return out


def default_confusion(strength: float = 0.7) -> np.ndarray:
    """Row-stochastic confusion matrix spreading errors within a size group."""
    n = len(CATEGORIES)
    conf = np.zeros((n, n))
    for i, ci in enumerate(CATEGORIES):
        group = [j for j, cj in enumerate(CATEGORIES) if SIZE_GROUP[cj] == SIZE_GROUP[ci]]
        others = [j for j in group if j != i]
        conf[i, i] = strength if others else 1.0
        for j in others:
            conf[i, j] = (1.0 - strength) / len(others)
    return conf


REPRESENTATIVE_TYPE_CODE: Dict[str, int] = {
    "anti_pollution_law": 54, "medical_non_conflict": 58, "cargo": 70,
    "dredging_military_sailboat": 33, "fishing": 30, "high_speed_craft": 40,
    "other_unknown_reserved": 90, "passenger": 60, "pilot_boat": 50,
    "pleasure": 37, "search_and_rescue": 51, "tanker": 80,
    "tug_towing": 52, "wing_in_ground": 20,
}


# ---------------------------------------------------------------------------
# Configuration


@dataclass
class DarkPeriod:
    start_s: float
    duration_s: float
    mmsi: Optional[int] = None  # None applies to every vessel


@dataclass
class AisStreamConfig:
    mean_interval_s: float = 600.0
    min_interval_s: float = 0.0
    pos_noise_m: float = 10.0
    mmsi_dropout: float = 0.0
    mislabel: float = 0.0
    dark_periods: List[DarkPeriod] = field(default_factory=list)

    def __post_init__(self):
        for p in (self.mmsi_dropout, self.mislabel):
            if not 0.0 <= p <= 1.0:
                raise ValueError("probabilities must be in [0, 1]")
        if self.mean_interval_s <= self.min_interval_s:
            raise ValueError("mean_interval_s must exceed min_interval_s")


@dataclass
class SensorSimConfig:
    sensor_id: str
    fov: Region
    kind: str = "geofix"                 # "geofix" | "rangebearing"
    scan_epochs: Optional[List[float]] = None
    first_scan_s: float = 0.0
    scan_interval_s: Optional[float] = None
    pd: float = 0.9
    clutter_rate: float = 0.0
    noise_m: float = 50.0                # geofix position std
    sigma_range_m: float = 50.0
    sigma_bearing_deg: float = 0.5
    sensor_pos: Optional[GeoPosition] = None  # rangebearing reference
    class_confusion: Optional[np.ndarray] = None
    extent_noise_m: float = 3.0
    emit_extent: bool = True

    def epochs(self, duration_s: float) -> List[float]:
        if self.scan_epochs is not None:
            out = sorted(t for t in self.scan_epochs if 0.0 <= t <= duration_s)
        elif self.scan_interval_s:
            out = list(np.arange(self.first_scan_s, duration_s, self.scan_interval_s))
        else:
            raise ValueError(f"sensor {self.sensor_id}: no scan schedule")
        return out


@dataclass
class VesselSimConfig:
    mmsi: int
    vessel_class: str
    route: List[GeoPosition]
    route_names: List[str]
    speed_mps: float = 8.0
    dwell_s: float = 0.0
    theta_per_s: float = 5e-3
    sigma: float = 0.02


@dataclass
class AnomalyEvent:
    mmsi: int
    t_s: float
    duration_s: float
    delta_mps: Tuple[float, float]


@dataclass
class ScenarioConfig:
    seed: int
    duration_s: float
    vessels: List[VesselSimConfig]
    ais: AisStreamConfig = field(default_factory=AisStreamConfig)
    sensors: List[SensorSimConfig] = field(default_factory=list)
    anomalies: List[AnomalyEvent] = field(default_factory=list)
    nodes: Dict[str, GeoPosition] = field(default_factory=dict)
    edges: List[Tuple[str, str]] = field(default_factory=list)
    arrival_radius_m: float = 400.0
    frame_origin: Optional[GeoPosition] = None

    def __post_init__(self):
        if self.duration_s <= 0:
            raise ValueError("duration_s must be positive")
        for a in self.anomalies:
            if not 0.0 <= a.t_s <= self.duration_s:
                raise ValueError("anomaly start outside scenario duration")
        for s in self.sensors:
            s.epochs(self.duration_s)  # validates schedules

    def frame(self) -> LocalFrame:
        if self.frame_origin is not None:
            return LocalFrame(self.frame_origin)
        if self.nodes:
            lat = float(np.mean([p.lat for p in self.nodes.values()]))
            lon = float(np.mean([p.lon for p in self.nodes.values()]))
            return LocalFrame(GeoPosition(lat, lon))
        return LocalFrame(self.vessels[0].route[0])

    @classmethod
    def from_json(cls, text: str) -> "ScenarioConfig":
        doc = json.loads(text)
        defaults = doc.get("defaults", {})
        nodes = {name: GeoPosition(lat, lon)
                 for name, (lat, lon) in doc.get("nodes", {}).items()}
        class_params = doc.get("class_params", {})

        vessels = []
        for v in doc["vessels"]:
            route_spec = v["route"]
            if route_spec and isinstance(route_spec[0], str):
                names = list(route_spec)
                route = [nodes[name] for name in names]
            else:
                route = [GeoPosition(lat, lon) for lat, lon in route_spec]
                names = [f"wp{i}" for i in range(len(route))]
            cls_name = v.get("class", "cargo")
            params = class_params.get(cls_name, {})

            def pick(key, fallback):
                return v.get(key, params.get(key, defaults.get(key, fallback)))

            vessels.append(VesselSimConfig(
                mmsi=int(v["mmsi"]), vessel_class=cls_name,
                route=route, route_names=names,
                speed_mps=float(pick("speed_mps", 8.0)),
                dwell_s=float(pick("dwell_s", 0.0)),
                theta_per_s=float(pick("theta_per_s", 5e-3)),
                sigma=float(pick("sigma", 0.02)),
            ))

        ais_doc = doc.get("ais", {})
        ais = AisStreamConfig(
            mean_interval_s=float(ais_doc.get("mean_interval_s", 600.0)),
            min_interval_s=float(ais_doc.get("min_interval_s", 0.0)),
            pos_noise_m=float(ais_doc.get("pos_noise_m", 10.0)),
            mmsi_dropout=float(ais_doc.get("mmsi_dropout", 0.0)),
            mislabel=float(ais_doc.get("mislabel", 0.0)),
            dark_periods=[DarkPeriod(float(d["start_s"]), float(d["duration_s"]),
                                     d.get("mmsi"))
                          for d in ais_doc.get("dark_periods", [])],
        )

        sensors = []
        for s in doc.get("sensors", []):
            fov_doc = s["fov"]
            if "bbox" in fov_doc:
                fov = Region.from_bbox(*fov_doc["bbox"])
            else:
                fov = Region([GeoPosition(lat, lon) for lat, lon in fov_doc["polygon"]])
            confusion = s.get("class_confusion")
            if confusion == "default":
                confusion = default_confusion()
            elif confusion is not None:
                confusion = np.asarray(confusion, dtype=float)
            sensor_pos = None
            if "sensor_lat" in s:
                sensor_pos = GeoPosition(s["sensor_lat"], s["sensor_lon"])
            sensors.append(SensorSimConfig(
                sensor_id=str(s["sensor_id"]), fov=fov,
                kind=s.get("kind", "geofix"),
                scan_epochs=s.get("scan_epochs"),
                first_scan_s=float(s.get("first_scan_s", 0.0)),
                scan_interval_s=s.get("scan_interval_s"),
                pd=float(s.get("pd", 0.9)),
                clutter_rate=float(s.get("clutter_rate", 0.0)),
                noise_m=float(s.get("noise_m", 50.0)),
                sigma_range_m=float(s.get("sigma_range_m", 50.0)),
                sigma_bearing_deg=float(s.get("sigma_bearing_deg", 0.5)),
                sensor_pos=sensor_pos,
                class_confusion=confusion,
                extent_noise_m=float(s.get("extent_noise_m", 3.0)),
            ))

        anomalies = [AnomalyEvent(int(a["mmsi"]), float(a["t_s"]),
                                  float(a["duration_s"]),
                                  (float(a["delta_mps"][0]), float(a["delta_mps"][1])))
                     for a in doc.get("anomalies", [])]

        frame_origin = None
        if "frame_origin" in doc:
            frame_origin = GeoPosition(*doc["frame_origin"])
        return cls(
            seed=int(doc.get("seed", 0)),
            duration_s=float(doc["duration_s"]),
            vessels=vessels, ais=ais, sensors=sensors, anomalies=anomalies,
            nodes=nodes, edges=[tuple(e) for e in doc.get("edges", [])],
            arrival_radius_m=float(defaults.get("arrival_radius_m", 400.0)),
            frame_origin=frame_origin,
        )


# ---------------------------------------------------------------------------
# Ground truth


@dataclass(eq=False)
class VesselTruth:
    mmsi: int
    vessel_class: str
    length: float
    width: float
    times: np.ndarray          # (n,) seconds, 1 Hz
    states: np.ndarray         # (n, 4) [px, py, vx, vy] in the truth frame
    waypoints: List[Tuple[float, str]]
    anomalies: List[AnomalyEvent]

    def state_at(self, t: float) -> np.ndarray:
        """Linear interpolation between the 1 Hz samples."""
        times = self.times
        if t <= times[0]:
            return self.states[0].copy()
        if t >= times[-1]:
            return self.states[-1].copy()
        i = bisect_right(times.tolist(), t) - 1
        w = (t - times[i]) / (times[i + 1] - times[i])
        return (1.0 - w) * self.states[i] + w * self.states[i + 1]


@dataclass(eq=False)
class GroundTruth:
    frame: LocalFrame
    duration_s: float
    vessels: List[VesselTruth]

    def vessel(self, mmsi: int) -> VesselTruth:
        for v in self.vessels:
            if v.mmsi == mmsi:
                return v
        raise KeyError(mmsi)


def _vessel_anomaly_delta(anomalies: Sequence[AnomalyEvent], t: float) -> Tuple[float, float]:
    dx = dy = 0.0
    for a in anomalies:
        if a.t_s <= t < a.t_s + a.duration_s:
            dx += a.delta_mps[0]
            dy += a.delta_mps[1]
    return dx, dy


def _simulate_vessel(v: VesselSimConfig, cfg: ScenarioConfig,
                     frame: LocalFrame, rng: np.random.Generator) -> VesselTruth:
    route_xy = [to_local(p, frame) for p in v.route]
    if len(route_xy) < 1:
        raise ValueError(f"vessel {v.mmsi}: empty route")
    n_steps = int(cfg.duration_s) + 1
    states = np.empty((n_steps, 4))
    times = np.arange(n_steps, dtype=float)
    noise = rng.standard_normal((n_steps, 4))
    anomalies = [a for a in cfg.anomalies if a.mmsi == v.mmsi]

    # leg plan: optional dwell at start, legs between nodes, dwell at end
    x, y = route_xy[0]
    if v.dwell_s > 0 or len(route_xy) == 1:
        vx = vy = 0.0
    else:
        d = np.subtract(route_xy[1], route_xy[0])
        ux, uy = d / max(np.linalg.norm(d), 1e-9)
        vx, vy = v.speed_mps * ux, v.speed_mps * uy

    waypoints: List[Tuple[float, str]] = [(0.0, v.route_names[0])]
    leg_target = 1 if len(route_xy) > 1 else None
    phase = "dwell" if v.dwell_s > 0 else "leg"
    phase_until = v.dwell_s if phase == "dwell" else math.inf
    vbar = (0.0, 0.0)
    leg_dir = (0.0, 0.0)
    leg_deadline = math.inf

    def start_leg(k: float, target: int):
        nonlocal vbar, leg_dir, leg_deadline
        tx, ty = route_xy[target]
        d = math.hypot(tx - x, ty - y)
        ux, uy = ((tx - x) / d, (ty - y) / d) if d > 0 else (0.0, 0.0)
        leg_dir = (ux, uy)
        vbar = (v.speed_mps * ux, v.speed_mps * uy)
        leg_deadline = k + 2.0 * d / max(v.speed_mps, 0.1) + 600.0

    if phase == "leg" and leg_target is not None:
        start_leg(0.0, leg_target)

    states[0] = (x, y, vx, vy)
    factors_cache: dict = {}

    def factors(vbar_axis: float, axis: int):
        key = (round(vbar_axis, 12), axis)
        if key not in factors_cache:
            F, c, Q = ou_axis_factors(v.theta_per_s, v.sigma, vbar_axis, 1.0)
            l11 = math.sqrt(max(Q[0, 0], 0.0))
            l21 = Q[0, 1] / l11 if l11 > 0 else 0.0
            l22 = math.sqrt(max(Q[1, 1] - l21 * l21, 0.0))
            factors_cache[key] = (F[0, 1], F[1, 1], c[0], c[1], l11, l21, l22)
        return factors_cache[key]

    for k in range(1, n_steps):
        t_prev = float(times[k - 1])
        dxan, dyan = _vessel_anomaly_delta(anomalies, t_prev)
        vbx, vby = vbar[0] + dxan, vbar[1] + dyan
        for axis, (p, vv, vb) in enumerate(((x, vx, vbx), (y, vy, vby))):
            f01, f11, c0, c1, l11, l21, l22 = factors(vb, axis)
            e1, e2 = noise[k, 2 * axis], noise[k, 2 * axis + 1]
            p_new = p + f01 * vv + c0 + l11 * e1
            v_new = f11 * vv + c1 + l21 * e1 + l22 * e2
            if axis == 0:
                x, vx = p_new, v_new
            else:
                y, vy = p_new, v_new
        states[k] = (x, y, vx, vy)

        t = float(times[k])
        if phase == "dwell" and t >= phase_until and leg_target is not None:
            phase = "leg"
            start_leg(t, leg_target)
            waypoints.append((t, v.route_names[leg_target - 1]))
        elif phase == "leg" and leg_target is not None:
            tx, ty = route_xy[leg_target]
            # arrived when inside the node ball or past its perpendicular
            # plane (lateral drift must not let the vessel sail by forever)
            along = (tx - x) * leg_dir[0] + (ty - y) * leg_dir[1]
            if (math.hypot(tx - x, ty - y) <= cfg.arrival_radius_m
                    or along <= 0.0 or t >= leg_deadline):
                waypoints.append((t, v.route_names[leg_target]))
                if leg_target + 1 < len(route_xy):
                    leg_target += 1
                    start_leg(t, leg_target)
                else:
                    leg_target = None
                    phase = "moored"
                    vbar = (0.0, 0.0)

    length, width = sample_extent(v.vessel_class, rng)
    return VesselTruth(v.mmsi, v.vessel_class, length, width,
                       times, states, waypoints, anomalies)


def generate_truth(cfg: ScenarioConfig) -> GroundTruth:
    """Simulate every vessel at 1 Hz; deterministic for a fixed config seed."""
    frame = cfg.frame()
    seeds = np.random.SeedSequence(cfg.seed).spawn(len(cfg.vessels))
    vessels = [
        _simulate_vessel(v, cfg, frame, np.random.default_rng(ss))
        for v, ss in zip(cfg.vessels, seeds)
    ]
    return GroundTruth(frame, cfg.duration_s, vessels)


# ---------------------------------------------------------------------------
# AIS emission


def _in_dark(t: float, mmsi: int, periods: Sequence[DarkPeriod]) -> bool:
    return any(
        p.start_s <= t < p.start_s + p.duration_s
        and (p.mmsi is None or p.mmsi == mmsi)
        for p in periods
    )


def emit_ais(truth: GroundTruth, cfg: ScenarioConfig) -> List[AISRecord]:
    """Synthesize the AIS message stream for a simulated scenario.

    Per vessel, inter-arrival times are ``min_interval + Exp(mean - min)``;
    messages inside a dark period are suppressed (the arrival process keeps
    running).  Reported positions get isotropic Gaussian noise; speed and
    course are taken from the true velocity.
    """
    ais = cfg.ais
    records: List[AISRecord] = []
    seeds = np.random.SeedSequence((cfg.seed, 1)).spawn(len(truth.vessels))
    for vt, ss in zip(truth.vessels, seeds):
        rng = np.random.default_rng(ss)
        t = 0.0
        while True:
            t += ais.min_interval_s + rng.exponential(ais.mean_interval_s - ais.min_interval_s)
            if t > truth.duration_s:
                break
            if _in_dark(t, vt.mmsi, ais.dark_periods):
                continue
            st = vt.state_at(t)
            px, py = st[0] + rng.normal(0, ais.pos_noise_m), st[1] + rng.normal(0, ais.pos_noise_m)
            vel = st[2:]
            mmsi: Optional[int] = vt.mmsi
            if rng.random() < ais.mmsi_dropout:
                mmsi = None
            elif rng.random() < ais.mislabel:
                while True:
                    wrong = int(rng.integers(100000000, 999999999))
                    if wrong != vt.mmsi:
                        mmsi = wrong
                        break
            records.append(AISRecord(
                t=t, pos=from_local(px, py, truth.frame),
                sog=float(np.linalg.norm(vel)), cog=course_of(vel),
                mmsi=mmsi,
                ship_type=REPRESENTATIVE_TYPE_CODE[vt.vessel_class],
                length=vt.length, width=vt.width,
            ))
    records.sort(key=lambda r: r.t)
    return records


# ---------------------------------------------------------------------------
# Sensor detection emission


def _detect_vessel(vt: VesselTruth, t: float, sensor: SensorSimConfig,
                   frame: LocalFrame, rng: np.random.Generator) -> Detection:
    st = vt.state_at(t)
    if sensor.kind == "rangebearing":
        ref = sensor.sensor_pos or frame.origin
        rx, ry = to_local(ref, frame)
        dx, dy = st[0] - rx, st[1] - ry
        rho = math.hypot(dx, dy) + rng.normal(0, sensor.sigma_range_m)
        theta = math.atan2(dx, dy) + rng.normal(0, math.radians(sensor.sigma_bearing_deg))
        body = RangeBearing(max(rho, 0.0), theta, ref)
    else:
        px = st[0] + rng.normal(0, sensor.noise_m)
        py = st[1] + rng.normal(0, sensor.noise_m)
        body = GeoFix(from_local(px, py, frame))
    extent = None
    if sensor.emit_extent:
        extent = (max(3.0, vt.length + rng.normal(0, sensor.extent_noise_m)),
                  max(1.0, vt.width + rng.normal(0, sensor.extent_noise_m)))
    scores = None
    if sensor.class_confusion is not None:
        scores = sensor.class_confusion[CATEGORIES.index(vt.vessel_class)].copy()
    return Detection(t=t, sensor_id=sensor.sensor_id, body=body,
                     extent=extent, class_scores=scores)


def _clutter_detection(t: float, sensor: SensorSimConfig, frame: LocalFrame,
                       rng: np.random.Generator) -> Detection:
    pos = sensor.fov.sample_uniform(rng, 1)[0]
    if sensor.kind == "rangebearing":
        ref = sensor.sensor_pos or frame.origin
        rx, ry = to_local(ref, frame)
        px, py = to_local(pos, frame)
        body = RangeBearing(math.hypot(px - rx, py - ry),
                            math.atan2(px - rx, py - ry), ref)
    else:
        body = GeoFix(pos)
    extent = None
    if sensor.emit_extent:
        length = 30.0 * math.exp(0.5 * rng.standard_normal())
        extent = (length, length / 4.0)
    return Detection(t=t, sensor_id=sensor.sensor_id, body=body, extent=extent)


def emit_detections(truth: GroundTruth, cfg: ScenarioConfig) -> List[Detection]:
    """Synthesize sensor scans: per epoch, each in-FOV vessel is detected
    with probability pd, plus Poisson clutter uniform over the FOV."""
    out: List[Detection] = []
    seeds = np.random.SeedSequence((cfg.seed, 2)).spawn(max(len(cfg.sensors), 1))
    for sensor, ss in zip(cfg.sensors, seeds):
        rng = np.random.default_rng(ss)
        for t in sensor.epochs(truth.duration_s):
            for vt in truth.vessels:
                st = vt.state_at(t)
                pos = from_local(st[0], st[1], truth.frame)
                if not sensor.fov.contains(pos):
                    continue
                if rng.random() >= sensor.pd:
                    continue
                out.append(_detect_vessel(vt, t, sensor, truth.frame, rng))
            for _ in range(rng.poisson(sensor.clutter_rate)):
                out.append(_clutter_detection(t, sensor, truth.frame, rng))
    out.sort(key=lambda d: (d.t, d.sensor_id))
    return out


# ---------------------------------------------------------------------------
# Truth serialization (JSONL; see FORMATS.md)


def truth_to_jsonl(truth: GroundTruth, stride: int = 1) -> List[str]:
    lines = []
    for vt in truth.vessels:
        for i in range(0, len(vt.times), stride):
            st = vt.states[i]
            pos = from_local(st[0], st[1], truth.frame)
            lines.append(json.dumps({
                "t": float(vt.times[i]), "mmsi": vt.mmsi,
                "lat": pos.lat, "lon": pos.lon,
                "vx_mps": float(st[2]), "vy_mps": float(st[3]),
                "class": vt.vessel_class,
            }))
    return lines


def truth_from_jsonl(lines, frame: Optional[LocalFrame] = None) -> GroundTruth:
    """Rebuild a GroundTruth view (times/states per vessel) from truth.jsonl."""
    per: Dict[int, list] = {}
    classes: Dict[int, str] = {}
    rows = [json.loads(line) for line in lines if line.strip()]
    if frame is None:
        first = rows[0]
        frame = LocalFrame(GeoPosition(first["lat"], first["lon"]))
    duration = 0.0
    for obj in rows:
        mmsi = int(obj["mmsi"])
        x, y = to_local(GeoPosition(obj["lat"], obj["lon"]), frame)
        per.setdefault(mmsi, []).append((obj["t"], x, y, obj["vx_mps"], obj["vy_mps"]))
        classes[mmsi] = obj.get("class", "other_unknown_reserved")
        duration = max(duration, obj["t"])
    vessels = []
    for mmsi, samples in sorted(per.items()):
        samples.sort(key=lambda s: s[0])
        arr = np.asarray(samples)
        vessels.append(VesselTruth(
            mmsi, classes[mmsi], 0.0, 0.0,
            arr[:, 0], arr[:, 1:5], [], []))
    return GroundTruth(frame, duration, vessels)
