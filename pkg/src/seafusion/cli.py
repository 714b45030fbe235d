"""Command-line entry points.

Subcommands: simulate | extract-graph | track | detect-anomalies |
train-classifier | classify | evaluate.  Exit codes: 0 success,
2 validation error, 3 I/O error.  Outputs are staged and renamed into
place, so a failing run never leaves partial artifacts.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from typing import Dict, List, Optional

import numpy as np

from . import classifier as clf
from .anomaly import Decision, DetectConfig, detect
from .geo import GeoPosition, LocalFrame, Region, from_local, to_local
from .metrics import anomaly_roc, evaluate_scans
from .motion import ModelSet, NcvModel
from .records import (assemble_tracks, detection_to_json, parse_ais,
                      parse_detections)
from .simulator import (ScenarioConfig, default_confusion, emit_ais,
                        emit_detections, generate_truth, truth_from_jsonl,
                        truth_to_jsonl)
from .tracker import (Measurement, SensorModel, Tracker, TrackerConfig,
                      group_scans, route_model_set)
from .traffic import (WaypointConfig, extract_traffic_graph, graph_from_json,
                      graph_to_json)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_IO = 3


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_VALIDATION):
        super().__init__(message)
        self.code = code


def _read_lines(path: str) -> List[str]:
    try:
        with open(path) as fh:
            return fh.readlines()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}", EXIT_IO)


def _read_text(path: str) -> str:
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}", EXIT_IO)


def _write_atomic(path: str, text: str) -> None:
    tmp = path + ".tmp"
    try:
        with open(tmp, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc}", EXIT_IO)


def _warn_diagnostics(diags, what: str) -> None:
    if diags:
        print(f"warning: {len(diags)} rejected {what} line(s); first: "
              f"line {diags[0].line_no}: {diags[0].reason}", file=sys.stderr)


def _region_from_doc(doc) -> Region:
    if "bbox" in doc:
        return Region.from_bbox(*doc["bbox"])
    return Region([GeoPosition(lat, lon) for lat, lon in doc["polygon"]])


def _load_region(path: str) -> Region:
    doc = json.loads(_read_text(path))
    try:
        return _region_from_doc(doc)
    except (KeyError, TypeError, ValueError) as exc:
        raise CliError(f"bad region file {path}: {exc}")


# ---------------------------------------------------------------------------
# simulate


def _cmd_simulate(args) -> int:
    cfg = ScenarioConfig.from_json(_read_text(args.config))
    truth = generate_truth(cfg)
    ais = emit_ais(truth, cfg)
    dets = emit_detections(truth, cfg)

    os.makedirs(args.out_dir, exist_ok=True)
    from .records import ais_to_json
    _write_atomic(os.path.join(args.out_dir, "truth.jsonl"),
                  "\n".join(truth_to_jsonl(truth, stride=args.truth_stride)) + "\n")
    _write_atomic(os.path.join(args.out_dir, "ais.jsonl"),
                  "\n".join(ais_to_json(r) for r in ais) + ("\n" if ais else ""))
    _write_atomic(os.path.join(args.out_dir, "detections.jsonl"),
                  "\n".join(detection_to_json(d) for d in dets) + ("\n" if dets else ""))
    print(f"simulate: {len(truth.vessels)} vessel(s), {len(ais)} AIS message(s), "
          f"{len(dets)} detection(s) -> {args.out_dir}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# extract-graph


def _cmd_extract_graph(args) -> int:
    records, diags = parse_ais(_read_lines(args.ais))
    _warn_diagnostics(diags, "AIS")
    tracks = assemble_tracks(records, args.gap_threshold)
    if not tracks:
        raise CliError("no tracks could be assembled from the AIS input")
    boundary = _load_region(args.region) if args.region else None
    cfg = WaypointConfig(window=args.window, threshold=args.threshold,
                         min_segment=args.min_segment,
                         port_speed=args.port_speed,
                         turn_angle_deg=args.turn_angle,
                         boundary=boundary,
                         boundary_margin_m=args.boundary_margin)
    graph = extract_traffic_graph(tracks, cfg, eps=args.eps,
                                  min_pts=args.min_pts, w_min=args.w_min)
    _write_atomic(args.out, graph_to_json(graph))
    if not args.no_plots:
        from .plots import plot_traffic_graph
        plot_traffic_graph(graph, os.path.splitext(args.out)[0] + ".png")
    print(f"extract-graph: {len(tracks)} track(s) -> {graph.n_nodes} node(s), "
          f"{graph.n_edges} edge(s) -> {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# track


def _sensor_from_doc(sensor_id: str, doc: dict) -> SensorModel:
    fov = _region_from_doc(doc.get("fov", {"bbox": [-60.0, -179.0, 60.0, 179.0]}))
    noise = doc.get("noise", 100.0)
    noise_geofix = None
    noise_rb = None
    if isinstance(noise, dict):
        if "sigma_m" in noise:
            noise_geofix = np.eye(2) * float(noise["sigma_m"]) ** 2
        if "sigma_range_m" in noise:
            noise_rb = (float(noise["sigma_range_m"]),
                        math.radians(float(noise.get("sigma_bearing_deg", 0.5))))
    else:
        noise_geofix = np.eye(2) * float(noise) ** 2
    confusion = doc.get("confusion")
    if confusion == "default":
        confusion = default_confusion()
    elif confusion is not None:
        confusion = np.asarray(confusion, dtype=float)
    try:
        return SensorModel(
            sensor_id=sensor_id,
            pd=float(doc.get("pd", 0.9)),
            clutter_rate=float(doc.get("clutter_rate", 1.0)),
            fov_area_m2=fov.area_m2(),
            noise_geofix=noise_geofix,
            noise_rangebearing=noise_rb,
            class_confusion=confusion,
            label_error=float(doc.get("label_error", 0.0)),
        )
    except ValueError as exc:
        raise CliError(f"bad sensor config for {sensor_id!r}: {exc}")


def _cmd_track(args) -> int:
    ais_records, diags = parse_ais(_read_lines(args.ais))
    _warn_diagnostics(diags, "AIS")
    detections = []
    if args.detections:
        detections, ddiags = parse_detections(_read_lines(args.detections))
        _warn_diagnostics(ddiags, "detection")

    sensors_doc = json.loads(_read_text(args.sensors))
    sensors: Dict[str, SensorModel] = {
        sid: _sensor_from_doc(sid, doc) for sid, doc in sensors_doc.items()}
    if args.ais_sensor_id not in sensors:
        raise CliError(f"sensor config must define the AIS sensor "
                       f"{args.ais_sensor_id!r}")

    graph = None
    if args.graph:
        graph = graph_from_json(_read_text(args.graph))

    if args.origin:
        lat, lon = (float(v) for v in args.origin.split(","))
        frame = LocalFrame(GeoPosition(lat, lon))
    elif graph is not None and graph.frame is not None:
        frame = graph.frame
    elif ais_records:
        frame = LocalFrame(ais_records[0].pos)
    elif detections:
        first = detections[0]
        pos = first.body.pos if hasattr(first.body, "pos") else first.body.sensor_pos
        frame = LocalFrame(pos)
    else:
        raise CliError("no measurements to track")

    if graph is not None and graph.n_edges > 0:
        model_set = route_model_set(graph, theta=args.theta, sigma=args.sigma)
    else:
        model_set = ModelSet.single(NcvModel(args.ncv_q))

    measurements = [Measurement.from_ais(r, args.ais_sensor_id) for r in ais_records]
    measurements += [Measurement.from_detection(d) for d in detections]

    cfg = TrackerConfig(n_particles=args.particles)
    tracker = Tracker(sensors, model_set, frame, cfg, seed=args.seed)

    lines = []
    for (t, sid), scan in group_scans(measurements):
        for est in tracker.process_scan(t, sid, scan):
            pos = from_local(est.px, est.py, frame)
            speed = math.hypot(est.vx, est.vy)
            course = math.degrees(math.atan2(est.vx, est.vy)) % 360.0
            obj = {"t": t, "track_id": est.id, "lat": pos.lat, "lon": pos.lon,
                   "speed_mps": speed, "course_deg": course,
                   "class": clf.CATEGORIES[est.class_idx],
                   "existence": est.existence}
            if est.mmsi is not None:
                obj["mmsi"] = est.mmsi
            lines.append(json.dumps(obj))
    _write_atomic(args.out, "\n".join(lines) + ("\n" if lines else ""))
    print(f"track: {len(measurements)} measurement(s) -> "
          f"{len(lines)} estimate line(s) -> {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# detect-anomalies


def _cmd_detect_anomalies(args) -> int:
    records, diags = parse_ais(_read_lines(args.ais))
    _warn_diagnostics(diags, "AIS")
    tracks = assemble_tracks(records, args.gap_threshold)
    graph = graph_from_json(_read_text(args.graph))
    cfg = DetectConfig(window=args.window, stride=args.stride,
                       threshold=args.threshold, target_far=args.far,
                       theta_per_s=args.theta, sigma=args.sigma,
                       edge_gate_m=args.edge_gate, node_mask_m=args.node_mask)
    lines = []
    n_anom = 0
    for track in tracks:
        if len(track.points) < cfg.window:
            continue
        for rep in detect(track, graph, cfg):
            obj = {"mmsi": rep.mmsi, "t_start": rep.t_start, "t_end": rep.t_end,
                   "lambda": rep.statistic, "threshold": rep.threshold,
                   "decision": rep.decision.value,
                   "delta_mps": [float(rep.delta_hat[0]), float(rep.delta_hat[1])]}
            if rep.edge_id is not None:
                obj["edge_id"] = rep.edge_id
            n_anom += rep.decision is Decision.ANOMALOUS
            lines.append(json.dumps(obj))
    _write_atomic(args.out, "\n".join(lines) + ("\n" if lines else ""))
    print(f"detect-anomalies: {len(lines)} window(s), {n_anom} anomalous -> {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# train-classifier / classify


def _cmd_train_classifier(args) -> int:
    dataset = []
    for line_no, line in enumerate(_read_lines(args.data), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
            label = obj["label"]
            idx = label if isinstance(label, int) else clf.CATEGORIES.index(label)
            dataset.append((clf.FeatureVector(
                obj["length"], obj["width"], obj.get("area"), obj.get("aspect")),
                idx))
        except (ValueError, KeyError) as exc:
            raise CliError(f"bad training line {line_no}: {exc}")
    if not dataset:
        raise CliError("empty training set")
    net, losses = clf.train(clf.init_network(args.seed), dataset,
                            epochs=args.epochs, lr=args.lr, batch=args.batch,
                            seed=args.seed)
    clf.save_model(net, args.out)
    print(f"train-classifier: {len(dataset)} sample(s), "
          f"final loss {losses[-1]:.4f} -> {args.out}")
    return EXIT_OK


def _cmd_classify(args) -> int:
    net = clf.load_model(args.model)
    lines_out = []
    for line_no, line in enumerate(_read_lines(args.features), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
            features = clf.FeatureVector(obj["length"], obj["width"],
                                         obj.get("area"), obj.get("aspect"))
        except (ValueError, KeyError) as exc:
            raise CliError(f"bad feature line {line_no}: {exc}")
        dist = clf.classify(net, features)
        out = {"class_scores": [float(p) for p in dist.probs],
               "category": dist.argmax_name}
        if "id" in obj:
            out["id"] = obj["id"]
        lines_out.append(json.dumps(out))
    _write_atomic(args.out, "\n".join(lines_out) + ("\n" if lines_out else ""))
    print(f"classify: {len(lines_out)} feature line(s) -> {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# evaluate


def _cmd_evaluate(args) -> int:
    timings: Dict[str, float] = {}
    t0 = time.perf_counter()
    truth = truth_from_jsonl(_read_lines(args.truth))
    track_lines = _read_lines(args.tracks)
    est_by_scan: Dict[float, List] = {}
    for line in track_lines:
        line = line.strip()
        if not line:
            continue
        obj = json.loads(line)
        xy = to_local(GeoPosition(obj["lat"], obj["lon"]), truth.frame)
        est_by_scan.setdefault(float(obj["t"]), []).append(
            (xy[0], xy[1], obj.get("mmsi")))
    timings["load"] = time.perf_counter() - t0

    mmsis = [v.mmsi for v in truth.vessels]

    def truth_at(t):
        return np.array([v.state_at(t)[:2] for v in truth.vessels])

    t0 = time.perf_counter()
    report = evaluate_scans(est_by_scan, truth_at, mmsis,
                            c=args.gospa_c, p=args.gospa_p)
    timings["metrics"] = time.perf_counter() - t0

    roc_points = None
    if args.anomalies:
        if not args.scenario:
            raise CliError("--anomalies requires --scenario for the injected windows")
        t0 = time.perf_counter()
        scen = ScenarioConfig.from_json(_read_text(args.scenario))
        lams, labels = [], []
        for line in _read_lines(args.anomalies):
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            if obj["decision"] == Decision.NO_REFERENCE.value:
                continue
            lams.append(float(obj["lambda"]))
            labels.append(any(
                a.mmsi == obj.get("mmsi")
                and obj["t_start"] <= a.t_s + a.duration_s
                and a.t_s <= obj["t_end"]
                for a in scen.anomalies))
        roc_points = anomaly_roc(lams, labels) if lams else []
        timings["roc"] = time.perf_counter() - t0

    os.makedirs(args.out_dir, exist_ok=True)
    csv_lines = ["t,gospa_total,gospa_loc,gospa_missed,gospa_false,k_true,k_est"]
    for s in report.per_scan:
        csv_lines.append(f"{s.t},{s.gospa.total},{s.gospa.localization},"
                         f"{s.gospa.missed},{s.gospa.false},{s.k_true},{s.k_est}")
    _write_atomic(os.path.join(args.out_dir, "gospa_timeseries.csv"),
                  "\n".join(csv_lines) + "\n")

    if roc_points is not None:
        roc_csv = ["threshold,far,tpr"]
        roc_csv += [f"{p.threshold},{p.far},{p.tpr}" for p in roc_points]
        _write_atomic(os.path.join(args.out_dir, "roc.csv"), "\n".join(roc_csv) + "\n")

    if not args.no_plots:
        t0 = time.perf_counter()
        from .plots import plot_cardinality, plot_gospa_timeseries, plot_roc
        if report.per_scan:
            plot_gospa_timeseries(report.per_scan,
                                  os.path.join(args.out_dir, "gospa_timeseries.png"))
            plot_cardinality(report.per_scan,
                             os.path.join(args.out_dir, "cardinality.png"))
        if roc_points:
            plot_roc(roc_points, os.path.join(args.out_dir, "roc.png"))
        timings["plots"] = time.perf_counter() - t0

    metrics = {
        "gospa": {
            "mean_total": report.mean_gospa,
            "mean_localization": report.mean_component("localization"),
            "mean_missed": report.mean_component("missed"),
            "mean_false": report.mean_component("false"),
            "c": args.gospa_c,
            "p": args.gospa_p,
        },
        "label_accuracy": report.label_accuracy,
        "cardinality": {
            "mean_true": float(np.mean([s.k_true for s in report.per_scan]))
            if report.per_scan else 0.0,
            "mean_est": float(np.mean([s.k_est for s in report.per_scan]))
            if report.per_scan else 0.0,
        },
        "n_scans": len(report.per_scan),
        "timings_s": timings,
    }
    if roc_points is not None:
        metrics["roc"] = [{"threshold": p.threshold, "far": p.far, "tpr": p.tpr}
                          for p in roc_points]
    _write_atomic(os.path.join(args.out_dir, "metrics.json"),
                  json.dumps(metrics, indent=2) + "\n")
    acc = report.label_accuracy
    print(f"evaluate: {len(report.per_scan)} scan(s), mean GOSPA "
          f"{report.mean_gospa:.1f} m, label accuracy "
          f"{'n/a' if acc is None else f'{acc:.3f}'} -> {args.out_dir}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="seafusion",
        description="Maritime surveillance toolkit: simulate, mine traffic "
                    "graphs, track, detect anomalies, classify, evaluate.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate truth, AIS, and detections")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--truth-stride", type=int, default=1)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("extract-graph", help="mine a traffic graph from AIS")
    p.add_argument("--ais", required=True)
    p.add_argument("--region", default=None, help="polygon file for entry/exit")
    p.add_argument("--out", required=True)
    p.add_argument("--eps", type=float, default=2000.0)
    p.add_argument("--min-pts", type=int, default=5)
    p.add_argument("--w-min", type=int, default=2)
    p.add_argument("--gap-threshold", type=float, default=6 * 3600.0)
    p.add_argument("--window", type=int, default=10)
    p.add_argument("--threshold", type=float, default=10.0)
    p.add_argument("--min-segment", type=int, default=10)
    p.add_argument("--port-speed", type=float, default=0.26)
    p.add_argument("--turn-angle", type=float, default=15.0)
    p.add_argument("--boundary-margin", type=float, default=5000.0)
    p.add_argument("--no-plots", action="store_true")
    p.set_defaults(func=_cmd_extract_graph)

    p = sub.add_parser("track", help="run the multisensor tracker")
    p.add_argument("--ais", required=True)
    p.add_argument("--detections", default=None)
    p.add_argument("--graph", default=None)
    p.add_argument("--sensors", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--particles", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--theta", type=float, default=2e-3)
    p.add_argument("--sigma", type=float, default=0.05)
    p.add_argument("--ncv-q", type=float, default=0.01)
    p.add_argument("--origin", default=None, help="lat,lon of the local frame")
    p.add_argument("--ais-sensor-id", default="ais")
    p.set_defaults(func=_cmd_track)

    p = sub.add_parser("detect-anomalies", help="GLR route-deviation detection")
    p.add_argument("--ais", required=True)
    p.add_argument("--graph", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--far", type=float, default=0.05)
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--window", type=int, default=30)
    p.add_argument("--stride", type=int, default=10)
    p.add_argument("--theta", type=float, default=1e-3)
    p.add_argument("--sigma", type=float, default=0.1)
    p.add_argument("--edge-gate", type=float, default=10000.0)
    p.add_argument("--node-mask", type=float, default=2500.0)
    p.add_argument("--gap-threshold", type=float, default=6 * 3600.0)
    p.set_defaults(func=_cmd_detect_anomalies)

    p = sub.add_parser("train-classifier", help="train the vessel classifier")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--epochs", type=int, default=60)
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--batch", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_train_classifier)

    p = sub.add_parser("classify", help="score extent features")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("evaluate", help="GOSPA and label metrics vs truth")
    p.add_argument("--tracks", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--anomalies", default=None)
    p.add_argument("--scenario", default=None)
    p.add_argument("--gospa-c", type=float, default=500.0)
    p.add_argument("--gospa-p", type=float, default=2.0)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--no-plots", action="store_true")
    p.set_defaults(func=_cmd_evaluate)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
