"""Windowed likelihood-ratio test for deviations from nominal route behavior.

The null hypothesis is that observed velocities follow the stationary
mean-reverting law around the route's long-run velocity ``v_mean`` (per-axis
variance ``sigma^2 / (2*theta)``); the alternative adds an unknown constant
offset ``delta``.  Correlated samples are handled through an effective
sample count derived from the exponential autocorrelation ``exp(-theta*dt)``,
which leaves the statistic asymptotically (here: exactly, for stationary
Gaussian windows) chi-squared with 2 degrees of freedom under the null.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from .geo import LocalFrame, to_local, to_local_array
from .motion import OUParams
from .records import Track
from .traffic import TrafficGraph, velocity_sequence


@dataclass(frozen=True, eq=False)
class NominalModel:
    """Nominal route behavior: mean-reverting parameters, optionally tied to
    a traffic-graph edge."""

    ou: OUParams
    edge_id: Optional[int] = None


class Decision(Enum):
    NOMINAL = "nominal"
    ANOMALOUS = "anomalous"
    NO_REFERENCE = "no_reference"


@dataclass(frozen=True, eq=False)
class AnomalyReport:
    t_start: float
    t_end: float
    statistic: float
    threshold: float
    decision: Decision
    delta_hat: np.ndarray          # estimated mean-velocity deviation (m/s)
    edge_id: Optional[int] = None
    mmsi: Optional[int] = None


def effective_sample_count(times: np.ndarray, theta: float) -> float:
    """Effective number of independent samples in a correlated window.

    ``Var(mean) = s^2 / N_eff`` with ``N_eff = N^2 / sum_ij rho(|t_i-t_j|)``
    and ``rho(d) = exp(-theta*d)``; samples spaced by several reversion
    times count as independent.
    """
    t = np.asarray(times, dtype=float)
    corr = np.exp(-theta * np.abs(t[:, None] - t[None, :]))
    return float(len(t) ** 2 / corr.sum())


def glr_statistic(window: Sequence[Tuple[float, np.ndarray]],
                  nominal: NominalModel) -> Tuple[float, np.ndarray]:
    """Likelihood-ratio statistic for a mean-velocity offset over one window.

    ``window`` is a sequence of (time, velocity 2-vector) samples.  Returns
    ``(statistic, delta_hat)`` where ``delta_hat`` is the sample mean of
    ``v - v_mean`` and the statistic is ``N_eff * sum_axis delta^2 / s^2``
    with ``s^2`` the per-axis stationary velocity variance.
    """
    if len(window) < 2:
        raise ValueError("window needs at least 2 samples")
    times = np.array([t for t, _ in window], dtype=float)
    vel = np.array([v for _, v in window], dtype=float)
    ou = nominal.ou
    theta_bar = float(ou.theta.mean())
    n_eff = effective_sample_count(times, theta_bar)
    delta = vel.mean(axis=0) - ou.v_mean
    s2 = ou.stationary_velocity_var()
    if np.any(s2 <= 0.0):
        raise ValueError("nominal model has zero stationary variance")
    lam = float(n_eff * np.sum(delta**2 / s2))
    return lam, delta


def sample_stationary_window(times: np.ndarray, ou: OUParams,
                             rng: np.random.Generator) -> np.ndarray:
    """Draw stationary velocities at ``times`` (exact AR recursion per axis)."""
    times = np.asarray(times, dtype=float)
    n = len(times)
    vel = np.empty((n, 2))
    for axis in range(2):
        s = math.sqrt(ou.stationary_velocity_var()[axis])
        v = ou.v_mean[axis] + s * rng.standard_normal()
        vel[0, axis] = v
        for i in range(1, n):
            a = math.exp(-ou.theta[axis] * (times[i] - times[i - 1]))
            v = ou.v_mean[axis] + a * (v - ou.v_mean[axis]) \
                + s * math.sqrt(1.0 - a * a) * rng.standard_normal()
            vel[i, axis] = v
    return vel


def calibrate_threshold(nominal: NominalModel, sample_times: Sequence[float],
                        target_far: float, mc_runs: int, seed: int) -> float:
    """Monte-Carlo threshold for a desired false-alarm rate.

    Simulates null-hypothesis windows on the given sampling pattern and
    returns the empirical (1 - target_far) quantile of the statistic;
    deterministic per seed.
    """
    if not 0.0 < target_far < 1.0:
        raise ValueError("target_far must be in (0, 1)")
    if mc_runs < 100.0 / target_far:
        raise ValueError(f"mc_runs must be at least {int(100 / target_far)} "
                         f"for target_far={target_far}")
    times = np.asarray(sample_times, dtype=float)
    rng = np.random.default_rng(seed)
    lams = np.empty(mc_runs)
    for i in range(mc_runs):
        vel = sample_stationary_window(times, nominal.ou, rng)
        lams[i], _ = glr_statistic(list(zip(times, vel)), nominal)
    return float(np.quantile(lams, 1.0 - target_far))


def chi2_threshold(target_far: float) -> float:
    """Asymptotic threshold: (1 - far) quantile of chi-squared with 2 dof."""
    return float(stats.chi2.ppf(1.0 - target_far, 2))


@dataclass
class DetectConfig:
    """Windowing and thresholding for :func:`detect`."""

    window: int = 30              # samples per window
    stride: int = 10
    threshold: Optional[float] = None
    target_far: float = 0.05
    theta_per_s: float = 1e-3     # nominal reversion rate
    sigma: float = 0.1            # nominal noise intensity
    edge_gate_m: float = 10000.0  # max distance from window centroid to edge
    course_gate_deg: float = 90.0
    min_speed: float = 0.5        # below this a window matches no route
    node_mask_m: float = 2500.0   # windows this close to a node have no
                                  # single-leg nominal (port calls, turns)

    def resolve_threshold(self) -> float:
        return self.threshold if self.threshold is not None \
            else chi2_threshold(self.target_far)


def _nearest_edge(graph: TrafficGraph, centroid_xy: np.ndarray,
                  mean_vel: np.ndarray, cfg: DetectConfig):
    """Nearest gated edge: perpendicular distance to the segment between node
    centroids, requiring course agreement within the configured gate."""
    frame = graph.frame
    best = None
    best_dist = cfg.edge_gate_m
    node_xy = to_local_array([n.centroid for n in graph.nodes], frame)
    speed = float(np.linalg.norm(mean_vel))
    if speed < cfg.min_speed:
        return None  # a stopped vessel is following no route
    if len(node_xy) and cfg.node_mask_m > 0.0:
        if float(np.linalg.norm(node_xy - centroid_xy, axis=1).min()) <= cfg.node_mask_m:
            return None  # at a waypoint: no single-leg nominal applies
    for eid, e in enumerate(graph.edges):
        a, b = node_xy[e.i], node_xy[e.j]
        d = b - a
        seg2 = float(d @ d)
        t = 0.0 if seg2 == 0 else min(1.0, max(0.0, float((centroid_xy - a) @ d) / seg2))
        dist = float(np.linalg.norm(a + t * d - centroid_xy))
        if dist > best_dist:
            continue
        edge_dir = np.array([math.sin(e.mean_course), math.cos(e.mean_course)])
        cosang = float(mean_vel @ edge_dir) / speed
        ang = math.degrees(math.acos(min(1.0, max(-1.0, cosang))))
        if ang > cfg.course_gate_deg:
            continue
        best = (eid, e)
        best_dist = dist
    return best


def detect(track: Track, graph: Optional[TrafficGraph], cfg: DetectConfig,
           nominal_override: Optional[NominalModel] = None) -> List[AnomalyReport]:
    """Slide windows over a track and test each against its nominal route.

    Each window is assigned to the nearest gated traffic-graph edge (or the
    explicit override); windows with no edge in range are reported as
    ``NO_REFERENCE`` rather than anomalous.
    """
    if graph is None and nominal_override is None:
        raise ValueError("need a traffic graph or an explicit nominal model")
    times, vel = velocity_sequence(track)
    frame = graph.frame if graph is not None else LocalFrame(track.points[0].pos)
    xy = to_local_array([p.pos for p in track.points], frame)
    threshold = cfg.resolve_threshold()

    reports: List[AnomalyReport] = []
    n = len(times)
    for start in range(0, max(n - cfg.window + 1, 1), cfg.stride):
        end = start + cfg.window
        if end > n:
            break
        w_times = times[start:end]
        w_vel = vel[start:end]
        centroid = xy[start:end].mean(axis=0)
        nominal = nominal_override
        edge_id = nominal.edge_id if nominal is not None else None
        if nominal is None:
            hit = _nearest_edge(graph, centroid, w_vel.mean(axis=0), cfg)
            if hit is None:
                reports.append(AnomalyReport(
                    float(w_times[0]), float(w_times[-1]), 0.0, threshold,
                    Decision.NO_REFERENCE, np.zeros(2), None, track.mmsi))
                continue
            edge_id, e = hit
            v_mean = e.mean_speed * np.array([math.sin(e.mean_course),
                                              math.cos(e.mean_course)])
            nominal = NominalModel(OUParams(v_mean, cfg.theta_per_s, cfg.sigma),
                                   edge_id)
        lam, delta = glr_statistic(list(zip(w_times, w_vel)), nominal)
        decision = Decision.ANOMALOUS if lam > threshold else Decision.NOMINAL
        reports.append(AnomalyReport(
            float(w_times[0]), float(w_times[-1]), lam, threshold, decision,
            delta, edge_id, track.mmsi))
    return reports
