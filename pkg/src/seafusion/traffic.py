"""Maritime traffic graph extraction from historical AIS tracks.

Pipeline: per-track velocity change-point detection -> waypoint
classification -> DBSCAN clustering of waypoints -> directed simple graph
with transit-count adjacency -> pruning and merging.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, replace
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import cKDTree

from .geo import GeoPosition, LocalFrame, Region, from_local, to_local, to_local_array
from .records import Track


class WaypointKind(Enum):
    PORT = "port"
    NAVIGATIONAL = "navigational"
    ENTRY = "entry"
    EXIT = "exit"
    ENTRY_EXIT = "entry_exit"


@dataclass(frozen=True, eq=False)
class Waypoint:
    """A velocity change-point event on one track."""

    pos: GeoPosition
    t: float
    kind: WaypointKind
    v_before: np.ndarray  # mean velocity (m/s) over the window before
    v_after: np.ndarray   # mean velocity over the window after
    track_ref: int        # index of the source track


@dataclass(frozen=True, eq=False)
class WaypointCluster:
    """A DBSCAN cluster of waypoints: one graph node."""

    id: int
    members: Tuple[Waypoint, ...]
    centroid: GeoPosition
    kind: WaypointKind
    radius_m: float
    n_members: int

    @classmethod
    def build(cls, cluster_id: int, members: Sequence[Waypoint],
              frame: LocalFrame) -> "WaypointCluster":
        if not members:
            raise ValueError("cluster must have members")
        xy = to_local_array([w.pos for w in members], frame)
        cx, cy = xy.mean(axis=0)
        radius = float(np.hypot(xy[:, 0] - cx, xy[:, 1] - cy).max())
        counts: dict = {}
        for w in members:
            counts[w.kind] = counts.get(w.kind, 0) + 1
        kind = max(WaypointKind, key=lambda k: (counts.get(k, 0), ))
        return cls(cluster_id, tuple(members), from_local(cx, cy, frame),
                   kind, radius, len(members))


@dataclass(eq=False)
class EdgeStats:
    """Directed edge of the traffic graph with aggregated leg attributes."""

    i: int
    j: int
    weight: int                 # transit count
    mean_speed: float           # m/s
    mean_course: float          # radians, clockwise from north
    speed_std: float
    course_std: float


class TrafficGraph:
    """Directed simple graph of waypoint clusters.

    ``adjacency[i, j]`` counts transits from node i to node j; the diagonal
    is always zero (no self-loops).  The edge list may temporarily hold
    parallel edges between the same node pair (e.g. when graphs are merged
    by hand); :func:`prune_and_merge` collapses them.
    """

    def __init__(self, nodes: Sequence[WaypointCluster], edges: Sequence[EdgeStats],
                 frame: Optional[LocalFrame] = None):
        self.nodes = list(nodes)
        self.edges = list(edges)
        if frame is None and self.nodes:
            frame = LocalFrame(self.nodes[0].centroid)
        self.frame = frame
        n = len(self.nodes)
        A = np.zeros((n, n), dtype=int)
        for e in self.edges:
            if not (0 <= e.i < n and 0 <= e.j < n):
                raise ValueError(f"edge ({e.i}, {e.j}) out of range")
            if e.i == e.j:
                raise ValueError("self-loops are not allowed")
            if e.weight < 1:
                raise ValueError("edge weights must be >= 1")
            A[e.i, e.j] += e.weight
        self.adjacency = A

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return len(self.edges)


# --------------------------------------------------------------------------
# Velocity sequences and change-point detection


def course_of(v: np.ndarray) -> float:
    """Course (rad, clockwise from north) of an east-north velocity vector."""
    c = math.atan2(v[0], v[1])
    return c + 2.0 * math.pi if c < 0.0 else c


def velocity_from_sog_cog(sog: float, cog: float) -> np.ndarray:
    """Decompose speed/course into an east-north velocity."""
    return np.array([sog * math.sin(cog), sog * math.cos(cog)])


def velocity_sequence(track: Track) -> Tuple[np.ndarray, np.ndarray]:
    """Per-point velocities of a track: (times (n,), velocities (n, 2)).

    Reported (sog, cog) pairs are decomposed directly; points missing either
    fall back to position finite differences (forward, backward at the end).
    """
    n = len(track.points)
    if n < 2:
        raise ValueError("track must have at least 2 points")
    frame = LocalFrame(track.points[0].pos)
    xy = to_local_array([p.pos for p in track.points], frame)
    times = np.array([p.t for p in track.points])
    vel = np.empty((n, 2))
    for i, p in enumerate(track.points):
        if p.sog is not None and p.cog is not None:
            vel[i] = velocity_from_sog_cog(p.sog, p.cog)
        else:
            j = i + 1 if i + 1 < n else i
            k = i if i + 1 < n else i - 1
            vel[i] = (xy[j] - xy[k]) / (times[j] - times[k])
    return times, vel


@dataclass
class WaypointConfig:
    """Tuning for :func:`detect_waypoints`.

    The statistic over a sliding split point t is
    ``L(t) = (window/4) * |mean_left - mean_right|^2 / pooled_var``,
    the Gaussian likelihood-ratio statistic for a mean shift of the
    stationary velocity; under no change ``L ~ Exp(1)`` per position.
    """

    window: int = 10
    threshold: float = 10.0
    min_segment: int = 10
    port_speed: float = 0.26          # ~0.5 kn
    turn_angle_deg: float = 15.0
    boundary: Optional[Region] = None
    boundary_margin_m: float = 5000.0


def _window_stats(vel: np.ndarray, i: int, w: int):
    left = vel[i - w:i]
    right = vel[i:i + w]
    ml = left.mean(axis=0)
    mr = right.mean(axis=0)
    ss = float(((left - ml) ** 2).sum() + ((right - mr) ** 2).sum())
    var = ss / (4.0 * (w - 1))
    return ml, mr, var


def detect_waypoints(track: Track, cfg: WaypointConfig,
                     track_ref: int = 0) -> List[Waypoint]:
    """Detect velocity change points on one track and classify them.

    A change is declared at local maxima of the two-window statistic above
    ``cfg.threshold``, keeping at least ``cfg.min_segment`` samples between
    accepted changes.  Classification, in order: port if either window mean
    speed is below ``port_speed``; entry/exit/entry-exit if the point lies
    within ``boundary_margin_m`` of the region boundary (the track's first
    such waypoint is an entry, its last an exit, anything else entry-exit);
    navigational if the course turns by more than ``turn_angle_deg``.
    Change points matching no rule are treated as spurious and dropped.
    """
    if len(track.points) < 2 * cfg.min_segment:
        raise ValueError("track too short for the configured min_segment")
    w = cfg.window
    times, vel = velocity_sequence(track)
    n = len(times)
    if n < 2 * w + 1:
        return []

    idx = np.arange(w, n - w + 1)
    lam = np.empty(len(idx))
    means = []
    for k, i in enumerate(idx):
        ml, mr, var = _window_stats(vel, i, w)
        shift = float(((ml - mr) ** 2).sum())
        if var <= 0.0:
            lam[k] = math.inf if shift > 0.0 else 0.0
        else:
            lam[k] = (w / 4.0) * shift / var
        means.append((ml, mr))

    # local maxima above threshold, then greedy separation by magnitude
    candidates = []
    for k in range(len(idx)):
        if lam[k] <= cfg.threshold:
            continue
        if k > 0 and lam[k] < lam[k - 1]:
            continue
        if k + 1 < len(idx) and lam[k] < lam[k + 1]:
            continue
        candidates.append(k)
    accepted: List[int] = []
    for k in sorted(candidates, key=lambda k: (-lam[k], k)):
        if all(abs(idx[k] - idx[a]) >= cfg.min_segment for a in accepted):
            accepted.append(k)
    accepted.sort()

    # classification means come from outside the transition: expand each
    # accepted peak to its contiguous above-threshold run, then step half a
    # window further out on both sides (a slow reversion to the new regime
    # otherwise leaks into the trailing window)
    def run_means(k: int):
        k0 = k
        while k0 > 0 and lam[k0 - 1] > cfg.threshold:
            k0 -= 1
        k1 = k
        while k1 + 1 < len(idx) and lam[k1 + 1] > cfg.threshold:
            k1 += 1
        k0 = max(k0 - w // 2, 0)
        k1 = min(k1 + w // 2, len(idx) - 1)
        return means[k0][0], means[k1][1]

    turn_angle = math.radians(cfg.turn_angle_deg)
    near_boundary = []
    track_starts_at_boundary = track_ends_at_boundary = False
    if cfg.boundary is not None:
        margin = cfg.boundary_margin_m
        for k in accepted:
            p = track.points[idx[k]].pos
            near_boundary.append(cfg.boundary.boundary_distance_m(p) <= margin)
        track_starts_at_boundary = (
            cfg.boundary.boundary_distance_m(track.points[0].pos) <= margin)
        track_ends_at_boundary = (
            cfg.boundary.boundary_distance_m(track.points[-1].pos) <= margin)
    else:
        near_boundary = [False] * len(accepted)

    out: List[Waypoint] = []
    for k, nb in zip(accepted, near_boundary):
        i = idx[k]
        ml, mr = run_means(k)
        sl, sr = np.linalg.norm(ml), np.linalg.norm(mr)
        kind: Optional[WaypointKind] = None
        if sl < cfg.port_speed or sr < cfg.port_speed:
            kind = WaypointKind.PORT
        elif nb:
            starts_here = track_starts_at_boundary and k == min(accepted)
            ends_here = track_ends_at_boundary and k == max(accepted)
            if starts_here and not ends_here:
                kind = WaypointKind.ENTRY
            elif ends_here and not starts_here:
                kind = WaypointKind.EXIT
            else:
                kind = WaypointKind.ENTRY_EXIT
        else:
            cosang = float(np.dot(ml, mr)) / (sl * sr)
            angle = math.acos(min(1.0, max(-1.0, cosang)))
            if angle > turn_angle:
                kind = WaypointKind.NAVIGATIONAL
        if kind is not None:
            out.append(Waypoint(track.points[i].pos, float(times[i]), kind,
                                ml.copy(), mr.copy(), track_ref))
    return out


# --------------------------------------------------------------------------
# DBSCAN clustering

_UNVISITED = -2
NOISE = -1


def dbscan_labels(xy: np.ndarray, eps: float, min_pts: int) -> np.ndarray:
    """Classic DBSCAN over an (n, 2) point array; returns integer labels.

    A point is core when it has at least ``min_pts`` neighbors within
    ``eps`` (itself included).  Clusters are grown breadth-first in input
    order, so border points on a tie go to the first cluster that reaches
    them; noise points get label -1.
    """
    n = len(xy)
    if n == 0:
        return np.empty(0, dtype=int)
    tree = cKDTree(xy)
    neighbors = [sorted(tree.query_ball_point(xy[i], eps)) for i in range(n)]
    labels = np.full(n, _UNVISITED, dtype=int)
    cid = 0
    for i in range(n):
        if labels[i] != _UNVISITED:
            continue
        if len(neighbors[i]) < min_pts:
            labels[i] = NOISE
            continue
        labels[i] = cid
        seeds = deque(neighbors[i])
        while seeds:
            j = seeds.popleft()
            if labels[j] == NOISE:
                labels[j] = cid  # border point claimed by this cluster
            if labels[j] != _UNVISITED:
                continue
            labels[j] = cid
            if len(neighbors[j]) >= min_pts:
                seeds.extend(neighbors[j])
        cid += 1
    return labels


def cluster_waypoints(waypoints: Sequence[Waypoint], eps: float, min_pts: int,
                      frame: Optional[LocalFrame] = None
                      ) -> Tuple[List[WaypointCluster], List[Waypoint]]:
    """DBSCAN over waypoint positions; returns (clusters, noise waypoints)."""
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    if min_pts < 1:
        raise ValueError("min_pts must be >= 1")
    if not waypoints:
        return [], []
    if frame is None:
        frame = LocalFrame(waypoints[0].pos)
    xy = to_local_array([w.pos for w in waypoints], frame)
    labels = dbscan_labels(xy, eps, min_pts)
    clusters = []
    for cid in range(labels.max() + 1 if labels.size else 0):
        members = [w for w, l in zip(waypoints, labels) if l == cid]
        clusters.append(WaypointCluster.build(cid, members, frame))
    noise = [w for w, l in zip(waypoints, labels) if l == NOISE]
    return clusters, noise


# --------------------------------------------------------------------------
# Graph construction


def circular_mean(angles: Sequence[float], weights: Optional[Sequence[float]] = None) -> float:
    a = np.asarray(angles, dtype=float)
    w = np.ones_like(a) if weights is None else np.asarray(weights, dtype=float)
    s = float(np.dot(w, np.sin(a)))
    c = float(np.dot(w, np.cos(a)))
    m = math.atan2(s, c)
    return m + 2.0 * math.pi if m < 0.0 else m


def circular_std(angles: Sequence[float], mean: Optional[float] = None) -> float:
    """Std of angle deviations wrapped to (-pi, pi] about the circular mean."""
    a = np.asarray(angles, dtype=float)
    if mean is None:
        mean = circular_mean(a)
    dev = np.angle(np.exp(1j * (a - mean)))
    return float(np.sqrt(np.mean(dev**2)))


def build_graph(tracks: Sequence[Track], clusters: Sequence[WaypointCluster],
                frame: Optional[LocalFrame] = None) -> TrafficGraph:
    """Assemble the directed traffic graph from clustered waypoints.

    Cluster members must carry ``track_ref`` equal to the index of their
    source track in ``tracks``.  Each track's waypoint sequence is mapped to
    cluster ids (noise waypoints were already removed by clustering),
    consecutive repeats collapsed, and one transit added per remaining
    consecutive pair.  Edge attributes aggregate the speed and course of the
    AIS samples between the two waypoints of each transit.
    """
    per_track: dict = {}
    for cl in clusters:
        for wp in cl.members:
            per_track.setdefault(wp.track_ref, []).append((wp.t, cl.id, wp))

    transits: dict = {}
    for ref, seq in sorted(per_track.items()):
        seq.sort(key=lambda item: item[0])
        collapsed = [seq[0]]
        for item in seq[1:]:
            if item[1] != collapsed[-1][1]:
                collapsed.append(item)
        if len(collapsed) < 2:
            continue
        track = tracks[ref]
        times, vel = velocity_sequence(track)
        for (ta, ia, _), (tb, ib, _) in zip(collapsed, collapsed[1:]):
            # the sample at tb belongs to the next leg
            mask = (times >= ta) & (times < tb)
            leg = vel[mask]
            if len(leg) == 0:
                continue
            speeds = np.linalg.norm(leg, axis=1)
            courses = [course_of(v) for v in leg]
            transits.setdefault((ia, ib), []).append(
                (float(speeds.mean()), circular_mean(courses)))

    edges = []
    for (i, j), legs in sorted(transits.items()):
        speeds = [s for s, _ in legs]
        courses = [c for _, c in legs]
        mc = circular_mean(courses)
        edges.append(EdgeStats(
            i=i, j=j, weight=len(legs),
            mean_speed=float(np.mean(speeds)),
            mean_course=mc,
            speed_std=float(np.std(speeds)),
            course_std=circular_std(courses, mc),
        ))
    return TrafficGraph(list(clusters), edges, frame)


def prune_and_merge(graph: TrafficGraph, w_min: int = 1,
                    merge_angle_deg: Optional[float] = None,
                    merge_overlap: Optional[float] = None) -> TrafficGraph:
    """Drop weak edges, merge parallel edges, and remove isolated nodes.

    ``merge_angle_deg`` and ``merge_overlap`` are reserved for geometric
    merging of nearly-parallel edges between different node pairs, which is
    out of scope; parallel edges between the same node pair are always
    merged (weights summed, attributes transit-weighted).  The operation is
    idempotent and never increases node or edge counts.
    """
    if w_min < 1:
        raise ValueError("w_min must be >= 1")
    kept = [e for e in graph.edges if e.weight >= w_min]

    by_pair: dict = {}
    for e in kept:
        by_pair.setdefault((e.i, e.j), []).append(e)
    merged = []
    for (i, j), group in sorted(by_pair.items()):
        if len(group) == 1:
            merged.append(group[0])
            continue
        wts = np.array([e.weight for e in group], dtype=float)
        total = int(wts.sum())
        mc = circular_mean([e.mean_course for e in group], wts)
        merged.append(EdgeStats(
            i=i, j=j, weight=total,
            mean_speed=float(np.dot(wts, [e.mean_speed for e in group]) / wts.sum()),
            mean_course=mc,
            speed_std=float(np.dot(wts, [e.speed_std for e in group]) / wts.sum()),
            course_std=float(np.dot(wts, [e.course_std for e in group]) / wts.sum()),
        ))

    used = sorted({e.i for e in merged} | {e.j for e in merged})
    remap = {old: new for new, old in enumerate(used)}
    nodes = [replace(graph.nodes[old], id=new) for old, new in remap.items()]
    edges = [replace(e, i=remap[e.i], j=remap[e.j]) for e in merged]
    return TrafficGraph(nodes, edges, graph.frame)


# --------------------------------------------------------------------------
# High-level pipeline and JSON export


def extract_traffic_graph(tracks: Sequence[Track], cfg: WaypointConfig,
                          eps: float, min_pts: int, w_min: int = 1) -> TrafficGraph:
    """Full extraction pipeline: waypoints -> clusters -> graph -> prune."""
    waypoints: List[Waypoint] = []
    for ref, track in enumerate(tracks):
        if len(track.points) < max(2 * cfg.min_segment, 2):
            continue
        waypoints.extend(detect_waypoints(track, cfg, track_ref=ref))
    if not waypoints:
        return TrafficGraph([], [], None)
    frame = LocalFrame(waypoints[0].pos)
    clusters, _ = cluster_waypoints(waypoints, eps, min_pts, frame)
    graph = build_graph(tracks, clusters, frame)
    return prune_and_merge(graph, w_min)


def graph_to_json(graph: TrafficGraph) -> str:
    origin = graph.frame.origin if graph.frame else GeoPosition(0.0, 0.0)
    doc = {
        "frame_origin": {"lat": origin.lat, "lon": origin.lon},
        "nodes": [
            {"id": n.id, "lat": n.centroid.lat, "lon": n.centroid.lon,
             "kind": n.kind.value, "radius_m": n.radius_m, "n_members": n.n_members}
            for n in graph.nodes
        ],
        "edges": [
            {"from": e.i, "to": e.j, "weight": e.weight,
             "mean_speed_mps": e.mean_speed,
             "mean_course_deg": math.degrees(e.mean_course),
             "speed_std": e.speed_std,
             "course_std": math.degrees(e.course_std)}
            for e in graph.edges
        ],
    }
    return json.dumps(doc, indent=2)


def graph_from_json(text: str) -> TrafficGraph:
    doc = json.loads(text)
    origin = GeoPosition(doc["frame_origin"]["lat"], doc["frame_origin"]["lon"])
    frame = LocalFrame(origin)
    nodes = [
        WaypointCluster(
            id=int(n["id"]), members=(),
            centroid=GeoPosition(n["lat"], n["lon"]),
            kind=WaypointKind(n["kind"]),
            radius_m=float(n["radius_m"]), n_members=int(n["n_members"]))
        for n in doc["nodes"]
    ]
    edges = [
        EdgeStats(
            i=int(e["from"]), j=int(e["to"]), weight=int(e["weight"]),
            mean_speed=float(e["mean_speed_mps"]),
            mean_course=math.radians(float(e["mean_course_deg"])),
            speed_std=float(e["speed_std"]),
            course_std=math.radians(float(e["course_std"])))
        for e in doc["edges"]
    ]
    return TrafficGraph(nodes, edges, frame)
