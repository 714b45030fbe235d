"""AIS and detection records, JSON-Lines parsing, and track assembly.

File schemas are documented in FORMATS.md.  Angles are degrees on disk and
radians in memory; speeds are meters/second in memory, with knots accepted
on input via the ``sog_unit`` field.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import IO, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .geo import GeoPosition

KNOT_MPS = 1852.0 / 3600.0
N_CLASSES = 14

TWO_PI = 2.0 * math.pi


def _wrap_angle(rad: float) -> float:
    """Wrap an angle into [0, 2*pi)."""
    rad = math.fmod(rad, TWO_PI)
    return rad + TWO_PI if rad < 0.0 else rad


def _check_mmsi(mmsi: int) -> int:
    mmsi = int(mmsi)
    if not 100000000 <= mmsi <= 999999999:
        raise ValueError(f"mmsi must be 9 decimal digits, got {mmsi}")
    return mmsi


@dataclass(frozen=True)
class AISRecord:
    """One AIS position report.

    ``sog``/``cog`` may be missing on degraded feeds; downstream consumers
    fall back to positional finite differences.  ``mmsi`` is optional because
    it "may be absent, or mistaken" on real feeds; unlabeled records still
    flow to the tracker as anonymous measurements.
    """

    t: float
    pos: GeoPosition
    sog: Optional[float] = None        # m/s, >= 0
    cog: Optional[float] = None        # radians in [0, 2*pi), 0 = north
    mmsi: Optional[int] = None
    ship_type: Optional[int] = None
    length: Optional[float] = None
    width: Optional[float] = None

    def __post_init__(self):
        if self.mmsi is not None:
            object.__setattr__(self, "mmsi", _check_mmsi(self.mmsi))
        if self.sog is not None and (not math.isfinite(self.sog) or self.sog < 0.0):
            raise ValueError(f"sog must be >= 0, got {self.sog}")
        if self.cog is not None:
            if not math.isfinite(self.cog):
                raise ValueError("cog must be finite")
            object.__setattr__(self, "cog", _wrap_angle(self.cog))
        for name in ("length", "width"):
            v = getattr(self, name)
            if v is not None and (not math.isfinite(v) or v <= 0.0):
                raise ValueError(f"{name} must be > 0, got {v}")


@dataclass(frozen=True)
class GeoFix:
    """Detection body: measured geographic position."""

    pos: GeoPosition


@dataclass(frozen=True)
class RangeBearing:
    """Detection body: range (m) and bearing (rad, clockwise from north)
    relative to a sensor reference position."""

    rho: float
    theta: float
    sensor_pos: GeoPosition

    def __post_init__(self):
        if not math.isfinite(self.rho) or self.rho < 0.0:
            raise ValueError(f"range must be >= 0, got {self.rho}")
        object.__setattr__(self, "theta", _wrap_angle(self.theta))


@dataclass(frozen=True, eq=False)
class Detection:
    """One sensor contact (e.g. a ship extracted from a satellite image).

    ``class_scores`` is a 14-vector over the vessel categories (see
    ``classifier.CATEGORIES``) summing to 1.  The measurement-noise model is
    resolved through the sensor configuration keyed by ``sensor_id``.
    """

    t: float
    sensor_id: str
    body: Union[GeoFix, RangeBearing]
    extent: Optional[Tuple[float, float]] = None  # (length, width) meters
    class_scores: Optional[np.ndarray] = None

    def __post_init__(self):
        if not isinstance(self.body, (GeoFix, RangeBearing)):
            raise ValueError("body must be GeoFix or RangeBearing")
        if self.extent is not None:
            l, w = self.extent
            if l <= 0 or w <= 0:
                raise ValueError("extent must be positive")
            object.__setattr__(self, "extent", (float(l), float(w)))
        if self.class_scores is not None:
            scores = np.asarray(self.class_scores, dtype=float)
            if scores.shape != (N_CLASSES,):
                raise ValueError(f"class_scores must have {N_CLASSES} entries")
            if np.any(scores < 0.0) or abs(scores.sum() - 1.0) > 1e-9:
                raise ValueError("class_scores must be nonnegative and sum to 1")
            object.__setattr__(self, "class_scores", scores)


@dataclass(frozen=True)
class Track:
    """Time-ordered AIS reports of a single vessel."""

    mmsi: int
    points: Tuple[AISRecord, ...]

    def __post_init__(self):
        object.__setattr__(self, "mmsi", _check_mmsi(self.mmsi))
        object.__setattr__(self, "points", tuple(self.points))
        for a, b in zip(self.points, self.points[1:]):
            if b.t <= a.t:
                raise ValueError("track timestamps must be strictly increasing")
        for p in self.points:
            if p.mmsi is not None and p.mmsi != self.mmsi:
                raise ValueError("track mixes mmsi values")


@dataclass(frozen=True)
class Diagnostic:
    """A rejected input line: where and why."""

    line_no: int
    reason: str


# --------------------------------------------------------------------------
# JSON-Lines serialization


def ais_to_json(rec: AISRecord) -> str:
    obj = {"t": rec.t, "lat": rec.pos.lat, "lon": rec.pos.lon}
    if rec.sog is not None:
        obj["sog"] = rec.sog
        obj["sog_unit"] = "mps"
    if rec.cog is not None:
        obj["cog_deg"] = math.degrees(rec.cog)
    if rec.mmsi is not None:
        obj["mmsi"] = rec.mmsi
    if rec.ship_type is not None:
        obj["ship_type"] = rec.ship_type
    if rec.length is not None:
        obj["length"] = rec.length
    if rec.width is not None:
        obj["width"] = rec.width
    return json.dumps(obj)


def _ais_from_obj(obj: dict) -> AISRecord:
    sog = obj.get("sog")
    if sog is not None:
        unit = obj.get("sog_unit", "mps")
        if unit == "kn":
            sog = sog * KNOT_MPS
        elif unit != "mps":
            raise ValueError(f"unknown sog_unit {unit!r}")
    cog_deg = obj.get("cog_deg")
    return AISRecord(
        t=float(obj["t"]),
        pos=GeoPosition(float(obj["lat"]), float(obj["lon"])),
        sog=sog,
        cog=math.radians(cog_deg) if cog_deg is not None else None,
        mmsi=obj.get("mmsi"),
        ship_type=obj.get("ship_type"),
        length=obj.get("length"),
        width=obj.get("width"),
    )


def detection_to_json(det: Detection) -> str:
    obj = {"t": det.t, "sensor_id": det.sensor_id}
    if isinstance(det.body, GeoFix):
        obj["kind"] = "geofix"
        obj["lat"] = det.body.pos.lat
        obj["lon"] = det.body.pos.lon
    else:
        obj["kind"] = "rangebearing"
        obj["rho"] = det.body.rho
        obj["theta_deg"] = math.degrees(det.body.theta)
        obj["sensor_lat"] = det.body.sensor_pos.lat
        obj["sensor_lon"] = det.body.sensor_pos.lon
    if det.extent is not None:
        obj["length"], obj["width"] = det.extent
    if det.class_scores is not None:
        obj["class_scores"] = [float(s) for s in det.class_scores]
    return json.dumps(obj)


def _detection_from_obj(obj: dict) -> Detection:
    kind = obj.get("kind")
    if kind == "geofix":
        body = GeoFix(GeoPosition(float(obj["lat"]), float(obj["lon"])))
    elif kind == "rangebearing":
        body = RangeBearing(
            rho=float(obj["rho"]),
            theta=math.radians(float(obj["theta_deg"])),
            sensor_pos=GeoPosition(float(obj["sensor_lat"]), float(obj["sensor_lon"])),
        )
    else:
        raise ValueError(f"unknown detection kind {kind!r}")
    extent = None
    if "length" in obj or "width" in obj:
        extent = (float(obj["length"]), float(obj["width"]))
    scores = obj.get("class_scores")
    return Detection(
        t=float(obj["t"]),
        sensor_id=str(obj["sensor_id"]),
        body=body,
        extent=extent,
        class_scores=np.asarray(scores, dtype=float) if scores is not None else None,
    )


def _parse_lines(lines: Iterable[str], from_obj, what: str):
    """Shared JSONL loop: valid lines parsed, bad ones become diagnostics."""
    records = []
    diagnostics: List[Diagnostic] = []
    for line_no, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
            if not isinstance(obj, dict):
                raise ValueError(f"{what} line must be a JSON object")
            records.append(from_obj(obj))
        except (ValueError, KeyError, TypeError) as exc:
            diagnostics.append(Diagnostic(line_no, str(exc) or repr(exc)))
    return records, diagnostics


def parse_ais(lines: Iterable[str]) -> Tuple[List[AISRecord], List[Diagnostic]]:
    """Parse an AIS JSON-Lines stream.

    Invalid lines are reported as diagnostics with their line number and
    reason; they are never silently dropped.
    """
    return _parse_lines(lines, _ais_from_obj, "AIS")


def parse_detections(lines: Iterable[str]) -> Tuple[List[Detection], List[Diagnostic]]:
    """Parse a detection JSON-Lines stream; same error contract as parse_ais."""
    return _parse_lines(lines, _detection_from_obj, "detection")


# --------------------------------------------------------------------------
# Track assembly


def assemble_tracks(records: Sequence[AISRecord], gap_threshold: float) -> List[Track]:
    """Group labeled records into per-vessel tracks, splitting at long gaps.

    Records are grouped by mmsi and time-sorted; a new track starts whenever
    the gap to the previous report exceeds ``gap_threshold`` seconds.
    Records without mmsi are excluded (they remain available to the tracker
    as anonymous measurements).  Exact-duplicate timestamps within a vessel
    are dropped, keeping the first report.
    """
    if gap_threshold <= 0.0:
        raise ValueError("gap_threshold must be positive")
    by_mmsi: dict = {}
    for rec in records:
        if rec.mmsi is not None:
            by_mmsi.setdefault(rec.mmsi, []).append(rec)

    tracks: List[Track] = []
    for mmsi in sorted(by_mmsi):
        group = sorted(by_mmsi[mmsi], key=lambda r: r.t)
        run: List[AISRecord] = []
        for rec in group:
            if run and rec.t == run[-1].t:
                continue
            if run and rec.t - run[-1].t > gap_threshold:
                tracks.append(Track(mmsi, tuple(run)))
                run = []
            run.append(rec)
        if run:
            tracks.append(Track(mmsi, tuple(run)))
    return tracks
