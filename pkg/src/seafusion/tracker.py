"""Scalable multisensor multitarget tracker.

Potential targets carry a particle belief over position-velocity, a Bernoulli
existence probability, a distribution over dynamic-model indices, a
distribution over MMSI labels (with an explicit "unknown" hypothesis), and a
distribution over vessel categories.  Each scan runs: prediction under the
Markov-switching model set, single-sensor association weights, iterative
sum-product data association on the bipartite target/measurement graph,
measurement update (kinematics, existence, label, class), birth from
unexplained measurements, and pruning.

The association messages are

    phi[k->m] = beta_k(m) / (beta_k(0) + sum_{m' != m} beta_k(m') nu[m'->k])
    nu[m->k]  = 1 / (1 + sum_{k' != k} phi[k'->m])

with ``nu`` initialized to one; marginals are ``beta_k(m) nu[m->k]`` (miss:
``beta_k(0)``), row-normalized.  For a single target the fixed point is the
exact posterior; in general the iteration approximates the marginals of the
one-to-one association law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .geo import GeoPosition, LocalFrame, Region, to_local
from .motion import DynamicModel, ModelSet, NcvModel, OUParams, OuModel, propagate_states
from .records import AISRecord, Detection, GeoFix, RangeBearing
from .traffic import TrafficGraph

N_CLASSES = 14
UNKNOWN_LABEL = None          # label-distribution key for "not yet identified"
_TINY = 1e-300
_MISS_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class Measurement:
    """Sensor-agnostic measurement: a detection body plus optional identity
    and class evidence (AIS messages carry the MMSI; image-derived contacts
    carry class scores)."""

    t: float
    sensor_id: str
    body: Union[GeoFix, RangeBearing]
    mmsi: Optional[int] = None
    class_scores: Optional[np.ndarray] = None

    @classmethod
    def from_ais(cls, rec: AISRecord, sensor_id: str = "ais") -> "Measurement":
        return cls(t=rec.t, sensor_id=sensor_id, body=GeoFix(rec.pos), mmsi=rec.mmsi)

    @classmethod
    def from_detection(cls, det: Detection) -> "Measurement":
        return cls(t=det.t, sensor_id=det.sensor_id, body=det.body,
                   class_scores=det.class_scores)


@dataclass(eq=False)
class SensorModel:
    """Detection statistics of one sensor.

    ``noise_geofix`` is the 2x2 position covariance for geographic fixes;
    ``noise_rangebearing`` is (sigma_range_m, sigma_bearing_rad).  The
    clutter density is ``clutter_rate / fov_area`` (floored to keep the
    association weights finite for clutter-free sensors).
    """

    sensor_id: str
    pd: float
    clutter_rate: float = 0.0
    fov_area_m2: float = 1.0
    noise_geofix: Optional[np.ndarray] = None
    noise_rangebearing: Optional[Tuple[float, float]] = None
    class_confusion: Optional[np.ndarray] = None
    label_error: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.pd <= 1.0:
            raise ValueError("pd must be in (0, 1]")
        if self.clutter_rate < 0.0 or self.fov_area_m2 <= 0.0:
            raise ValueError("clutter_rate must be >= 0 and fov_area positive")
        if not 0.0 <= self.label_error < 1.0:
            raise ValueError("label_error must be in [0, 1)")
        if self.noise_geofix is not None:
            R = np.asarray(self.noise_geofix, dtype=float)
            if R.shape == ():
                R = np.eye(2) * float(R) ** 2
            if R.shape != (2, 2):
                raise ValueError("geofix noise must be a 2x2 covariance")
            self.noise_geofix = R
        if self.class_confusion is not None:
            C = np.asarray(self.class_confusion, dtype=float)
            if C.shape != (N_CLASSES, N_CLASSES) or \
                    np.any(np.abs(C.sum(axis=1) - 1.0) > 1e-9):
                raise ValueError("confusion matrix must be 14x14 row-stochastic")
            self.class_confusion = C

    @property
    def clutter_density(self) -> float:
        return max(self.clutter_rate / self.fov_area_m2, _MISS_FLOOR)

    @classmethod
    def geofix(cls, sensor_id: str, pd: float, clutter_rate: float,
               fov_area_m2: float, noise_std_m: float, **kw) -> "SensorModel":
        return cls(sensor_id, pd, clutter_rate, fov_area_m2,
                   noise_geofix=np.eye(2) * noise_std_m**2, **kw)


@dataclass(eq=False)
class PotentialTarget:
    """One hypothesized vessel and everything the tracker believes about it."""

    id: int
    particles: np.ndarray                   # (P, 4) [px, py, vx, vy]
    weights: np.ndarray                     # (P,), sums to 1
    existence: float                        # Bernoulli probability in [0, 1]
    dm_dist: np.ndarray                     # over the model set
    label_dist: Dict[Optional[int], float]  # MMSI universe + UNKNOWN_LABEL
    class_dist: np.ndarray                  # over the 14 categories
    last_update: float
    degenerate: bool = False

    def validate(self) -> None:
        assert abs(self.weights.sum() - 1.0) <= 1e-9
        assert 0.0 <= self.existence <= 1.0
        assert abs(self.dm_dist.sum() - 1.0) <= 1e-9
        assert abs(sum(self.label_dist.values()) - 1.0) <= 1e-9
        assert abs(self.class_dist.sum() - 1.0) <= 1e-9

    def mean_state(self) -> np.ndarray:
        return self.weights @ self.particles

    def map_label(self) -> Optional[int]:
        return max(sorted(self.label_dist.items(),
                          key=lambda kv: (kv[0] is None, kv[0])),
                   key=lambda kv: kv[1])[0]


@dataclass(eq=False)
class AssociationProblem:
    """Association weights for one scan, plus cached per-particle evidence.

    ``beta`` is K x (M+1) with column 0 the miss weight
    ``1 - existence * pd`` and, for m >= 1,
    ``existence * pd / clutter_density * E[f(z_m | x)]`` times the label and
    class match factors.
    """

    beta: np.ndarray                        # (K, M+1)
    body_liks: List[np.ndarray]             # per target: (P, M)
    expected_liks: np.ndarray               # (K, M) particle-averaged body lik
    label_factors: np.ndarray               # (K, M)
    class_factors: np.ndarray               # (K, M)
    measurements: List[Measurement]
    sensor: SensorModel
    universe_size: int = 1
    marginals: Optional[np.ndarray] = None


@dataclass(eq=False)
class SpaResult:
    marginals: np.ndarray       # (K, M+1), rows sum to 1, column 0 = miss
    non_target: np.ndarray      # (M,) probability a measurement is unexplained
    converged: bool
    iterations: int


@dataclass(eq=False)
class TrackEstimate:
    id: int
    t: float
    mmsi: Optional[int]
    px: float
    py: float
    vx: float
    vy: float
    class_idx: int
    existence: float


# ---------------------------------------------------------------------------
# Prediction


def predict(targets: Sequence[PotentialTarget], model_set: ModelSet, dt: float,
            p_survive: float, rng: np.random.Generator) -> None:
    """Advance every target by ``dt``: the model distribution steps through
    the Markov chain, each particle is propagated under a model index drawn
    from the stepped distribution, and existence decays by ``p_survive``.
    Label and class distributions are static attributes and stay put."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if len(model_set) == 0:
        raise ValueError("empty model set")
    T = model_set.transition_matrix
    for tgt in targets:
        dm = tgt.dm_dist @ T
        dm = dm / dm.sum()
        tgt.dm_dist = dm
        n = len(tgt.particles)
        if len(model_set) == 1:
            tgt.particles = propagate_states(tgt.particles, model_set.models[0], dt, rng)
        else:
            idx = rng.choice(len(model_set), size=n, p=dm)
            out = np.empty_like(tgt.particles)
            for mi in np.unique(idx):
                sel = idx == mi
                out[sel] = propagate_states(tgt.particles[sel],
                                            model_set.models[mi], dt, rng)
            tgt.particles = out
        tgt.existence = min(tgt.existence * p_survive, 1.0)


# ---------------------------------------------------------------------------
# Likelihoods and association weights


def _wrap_pi(a: np.ndarray) -> np.ndarray:
    return (a + math.pi) % (2.0 * math.pi) - math.pi


def body_likelihood(meas: Measurement, particles: np.ndarray,
                    sensor: SensorModel, frame: LocalFrame) -> np.ndarray:
    """Per-particle measurement density f(z | x) for one measurement."""
    if isinstance(meas.body, GeoFix):
        if sensor.noise_geofix is None:
            raise ValueError(f"sensor {sensor.sensor_id} has no geofix noise model")
        R = sensor.noise_geofix
        z = np.asarray(to_local(meas.body.pos, frame))
        diff = particles[:, :2] - z
        Rinv = np.linalg.inv(R)
        quad = np.einsum("ni,ij,nj->n", diff, Rinv, diff)
        norm = 1.0 / (2.0 * math.pi * math.sqrt(np.linalg.det(R)))
        return norm * np.exp(-0.5 * quad)
    if sensor.noise_rangebearing is None:
        raise ValueError(f"sensor {sensor.sensor_id} has no range-bearing noise model")
    s_rho, s_theta = sensor.noise_rangebearing
    rx, ry = to_local(meas.body.sensor_pos, frame)
    dx = particles[:, 0] - rx
    dy = particles[:, 1] - ry
    rho_hat = np.hypot(dx, dy)
    theta_hat = np.arctan2(dx, dy)
    dr = meas.body.rho - rho_hat
    dth = _wrap_pi(meas.body.theta - theta_hat)
    return (np.exp(-0.5 * (dr / s_rho) ** 2) / (math.sqrt(2 * math.pi) * s_rho)
            * np.exp(-0.5 * (dth / s_theta) ** 2) / (math.sqrt(2 * math.pi) * s_theta))


def label_match_factor(meas_mmsi: Optional[int],
                       label_dist: Dict[Optional[int], float],
                       label_error: float, universe_size: int) -> float:
    """Marginal likelihood of an observed MMSI under a label distribution.

    A matching label explains the observation with probability
    ``1 - label_error``; a mismatched known label with
    ``label_error / (L - 1)``; the unknown-label hypothesis is uniform over
    the universe (a first sighting carries no prior information).
    """
    if meas_mmsi is None:
        return 1.0
    L = max(universe_size, 1)
    total = 0.0
    for lbl, p in label_dist.items():
        if lbl is UNKNOWN_LABEL:
            total += p / L
        elif lbl == meas_mmsi:
            total += p * (1.0 - label_error)
        else:
            total += p * (label_error / max(L - 1, 1))
    return total


def _label_likelihood_vector(meas_mmsi: int, labels: Sequence[Optional[int]],
                             label_error: float, universe_size: int) -> np.ndarray:
    L = max(universe_size, 1)
    out = np.empty(len(labels))
    for i, lbl in enumerate(labels):
        if lbl is UNKNOWN_LABEL:
            out[i] = 1.0 / L
        elif lbl == meas_mmsi:
            out[i] = 1.0 - label_error
        else:
            out[i] = label_error / max(L - 1, 1)
    return out


def class_match_factor(scores: Optional[np.ndarray], class_dist: np.ndarray,
                       confusion: Optional[np.ndarray]) -> float:
    """Marginal likelihood of reported class scores: sum_c p(c) (C @ scores)_c."""
    if scores is None or confusion is None:
        return 1.0
    return float(class_dist @ (confusion @ scores))


def expand_label_universe(targets: Sequence[PotentialTarget],
                          measurements: Sequence[Measurement],
                          universe_size: int) -> None:
    """Add newly-observed MMSIs to every target's label distribution.

    The unknown hypothesis stands for a uniform draw over the label
    universe, so when an identifier is seen for the first time it receives
    ``p(unknown) / universe_size`` of that mass; the remainder stays on
    unknown.  Targets with no unknown mass left are unchanged.
    """
    new_labels = {m.mmsi for m in measurements if m.mmsi is not None}
    U = max(universe_size, 1)
    for tgt in targets:
        p_u = tgt.label_dist.get(UNKNOWN_LABEL, 0.0)
        if p_u <= 0.0:
            continue
        for mmsi in sorted(new_labels):
            if mmsi in tgt.label_dist:
                continue
            share = p_u / U
            tgt.label_dist[mmsi] = share
            p_u -= share
            tgt.label_dist[UNKNOWN_LABEL] = p_u


def association_weights(targets: Sequence[PotentialTarget],
                        measurements: Sequence[Measurement],
                        sensor: SensorModel, frame: LocalFrame,
                        universe_size: int = 1) -> AssociationProblem:
    """Build the K x (M+1) association weight matrix for one scan."""
    K, M = len(targets), len(measurements)
    beta = np.zeros((K, M + 1))
    body_liks: List[np.ndarray] = []
    expected = np.zeros((K, M))
    label_f = np.ones((K, M))
    class_f = np.ones((K, M))
    mu_c = sensor.clutter_density
    for k, tgt in enumerate(targets):
        liks = np.empty((len(tgt.particles), M))
        for m, meas in enumerate(measurements):
            liks[:, m] = body_likelihood(meas, tgt.particles, sensor, frame)
            label_f[k, m] = label_match_factor(meas.mmsi, tgt.label_dist,
                                               sensor.label_error, universe_size)
            class_f[k, m] = class_match_factor(meas.class_scores, tgt.class_dist,
                                               sensor.class_confusion)
        body_liks.append(liks)
        expected[k] = tgt.weights @ liks
        beta[k, 0] = max(1.0 - tgt.existence * sensor.pd, _MISS_FLOOR)
        beta[k, 1:] = (tgt.existence * sensor.pd / mu_c
                       * expected[k] * label_f[k] * class_f[k])
    if not np.all(np.isfinite(beta)):
        raise ValueError("non-finite association weights")
    return AssociationProblem(beta, body_liks, expected, label_f, class_f,
                              list(measurements), sensor, universe_size)


# ---------------------------------------------------------------------------
# Sum-product association


def spa_associate(problem: AssociationProblem, max_iter: int = 200,
                  tol: float = 1e-6) -> SpaResult:
    """Iterate the association messages to (approximate) marginals.

    Exact for zero or one target and for measurement-free scans; otherwise
    loopy but rapidly convergent.  Non-convergence after ``max_iter`` is not
    fatal: the current marginals are returned with ``converged=False``.
    """
    beta = problem.beta
    K, M1 = beta.shape
    M = M1 - 1
    if K == 0:
        problem.marginals = np.zeros((0, M1))
        return SpaResult(problem.marginals, np.ones(M), True, 0)
    if M == 0:
        problem.marginals = np.ones((K, 1))
        return SpaResult(problem.marginals, np.empty(0), True, 0)

    beta0 = beta[:, :1]
    betam = beta[:, 1:]
    nu = np.ones((K, M))
    phi = np.zeros((K, M))
    converged = False
    iterations = max_iter
    for it in range(1, max_iter + 1):
        weighted = betam * nu
        s = beta0 + weighted.sum(axis=1, keepdims=True)
        phi = betam / np.maximum(s - weighted, _TINY)
        nu_new = 1.0 / np.maximum(1.0 + phi.sum(axis=0, keepdims=True) - phi, _TINY)
        delta = float(np.abs(nu_new - nu).max())
        nu = nu_new
        if delta < tol:
            converged = True
            iterations = it
            break

    un = np.concatenate([beta0, betam * nu], axis=1)
    marginals = un / un.sum(axis=1, keepdims=True)
    non_target = 1.0 / (1.0 + phi.sum(axis=0))
    problem.marginals = marginals
    return SpaResult(marginals, non_target, converged, iterations)


# ---------------------------------------------------------------------------
# Measurement update


def systematic_resample(weights: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Systematic resampling: indices drawn with one uniform offset."""
    n = len(weights)
    positions = (rng.random() + np.arange(n)) / n
    return np.searchsorted(np.cumsum(weights), positions)


def update(targets: Sequence[PotentialTarget], problem: AssociationProblem,
           spa: SpaResult, t: float, rng: np.random.Generator,
           resample_frac: float = 0.5) -> None:
    """Apply one scan's association marginals to every target in place.

    Particle weights, existence, label distribution, and class distribution
    all update as association-probability mixtures of their per-measurement
    posteriors plus the miss hypothesis; particles are systematically
    resampled when the effective sample size drops below ``resample_frac``
    of the particle count.  A target whose weights underflow to zero is
    flagged degenerate and loses its existence (pruning will drop it).
    """
    sensor = problem.sensor
    measurements = problem.measurements
    M = len(measurements)
    for k, tgt in enumerate(targets):
        p = spa.marginals[k]
        p_miss = p[0]
        r = tgt.existence

        mix = np.full(len(tgt.particles), p_miss)
        for m in range(M):
            if p[m + 1] <= 0.0:
                continue
            denom = problem.expected_liks[k, m]
            if denom <= 0.0:
                continue
            mix += p[m + 1] * problem.body_liks[k][:, m] / denom
        new_w = tgt.weights * mix
        total = float(new_w.sum())
        if not math.isfinite(total) or total <= 0.0:
            tgt.weights = np.full(len(tgt.particles), 1.0 / len(tgt.particles))
            tgt.existence = 0.0
            tgt.degenerate = True
            tgt.last_update = t
            continue
        tgt.weights = new_w / total

        miss_existence = r * (1.0 - sensor.pd) / max(1.0 - r * sensor.pd, _MISS_FLOOR)
        tgt.existence = float(min(1.0, p[1:].sum() + p_miss * miss_existence))

        # label posterior: mixture over associations of per-label likelihoods
        labeled = [m for m in range(M) if measurements[m].mmsi is not None
                   and p[m + 1] > 0.0]
        if labeled:
            labels = list(tgt.label_dist.keys())
            prior = np.array([tgt.label_dist[l] for l in labels])
            mixl = np.full(len(labels), p_miss + sum(
                p[m + 1] for m in range(M) if m not in labeled))
            for m in labeled:
                g = _label_likelihood_vector(measurements[m].mmsi, labels,
                                             sensor.label_error,
                                             problem.universe_size)
                gbar = float(prior @ g)
                if gbar > 0.0:
                    mixl += p[m + 1] * g / gbar
            post = prior * mixl
            post /= post.sum()
            tgt.label_dist = dict(zip(labels, post.tolist()))

        if sensor.class_confusion is not None:
            scored = [m for m in range(M) if measurements[m].class_scores is not None
                      and p[m + 1] > 0.0]
            if scored:
                mixc = np.full(N_CLASSES, p_miss + sum(
                    p[m + 1] for m in range(M) if m not in scored))
                for m in scored:
                    h = sensor.class_confusion @ measurements[m].class_scores
                    hbar = float(tgt.class_dist @ h)
                    if hbar > 0.0:
                        mixc += p[m + 1] * h / hbar
                post_c = tgt.class_dist * mixc
                tgt.class_dist = post_c / post_c.sum()

        ess = 1.0 / float(np.sum(tgt.weights**2))
        if ess < resample_frac * len(tgt.particles):
            idx = systematic_resample(tgt.weights, rng)
            tgt.particles = tgt.particles[idx]
            tgt.weights = np.full(len(idx), 1.0 / len(idx))
        tgt.last_update = t


# ---------------------------------------------------------------------------
# Birth


@dataclass
class BirthConfig:
    r0: float = 0.25               # base existence for a fresh target
    min_unassigned: float = 0.5    # non-target probability needed to spawn
    vel_std: float = 5.0           # underway velocity prior (m/s std per axis)
    slow_fraction: float = 0.3     # share of particles born near-stationary
    slow_std: float = 0.5          # their velocity std (moored/drifting)
    label_delta: float = 0.05      # mass kept on "unknown" when MMSI present


def birth(measurements: Sequence[Measurement], non_target: np.ndarray,
          sensor: SensorModel, frame: LocalFrame, cfg: BirthConfig,
          n_models: int, n_particles: int, next_id: int, t: float,
          rng: np.random.Generator) -> List[PotentialTarget]:
    """Spawn one potential target per sufficiently-unexplained measurement."""
    out: List[PotentialTarget] = []
    for m, meas in enumerate(measurements):
        if non_target[m] <= cfg.min_unassigned:
            continue
        if isinstance(meas.body, GeoFix):
            z = np.asarray(to_local(meas.body.pos, frame))
            R = sensor.noise_geofix if sensor.noise_geofix is not None else np.eye(2) * 100.0
            pos = z + rng.standard_normal((n_particles, 2)) @ np.linalg.cholesky(R).T
        else:
            s_rho, s_theta = sensor.noise_rangebearing or (100.0, 0.01)
            rx, ry = to_local(meas.body.sensor_pos, frame)
            rho = meas.body.rho + s_rho * rng.standard_normal(n_particles)
            theta = meas.body.theta + s_theta * rng.standard_normal(n_particles)
            pos = np.column_stack([rx + rho * np.sin(theta), ry + rho * np.cos(theta)])
        # velocity prior: mixture of an underway spread and a near-stationary
        # component (a first contact may well be moored or drifting)
        std = np.where(rng.random(n_particles) < cfg.slow_fraction,
                       cfg.slow_std, cfg.vel_std)
        vel = std[:, None] * rng.standard_normal((n_particles, 2))
        particles = np.column_stack([pos, vel])

        if meas.mmsi is not None:
            label_dist = {meas.mmsi: 1.0 - cfg.label_delta,
                          UNKNOWN_LABEL: cfg.label_delta}
        else:
            label_dist = {UNKNOWN_LABEL: 1.0}
        if meas.class_scores is not None:
            class_dist = meas.class_scores / meas.class_scores.sum()
        else:
            class_dist = np.full(N_CLASSES, 1.0 / N_CLASSES)

        out.append(PotentialTarget(
            id=next_id, particles=particles,
            weights=np.full(n_particles, 1.0 / n_particles),
            existence=min(cfg.r0 * float(non_target[m]), 0.999),
            dm_dist=np.full(n_models, 1.0 / n_models),
            label_dist=label_dist, class_dist=class_dist.copy(),
            last_update=t))
        next_id += 1
    return out


# ---------------------------------------------------------------------------
# Route-conditioned model sets


def route_model_set(graph: TrafficGraph, theta: float, sigma: float,
                    stickiness: float = 0.9, ncv_q: float = 0.01,
                    ncv_share: float = 0.05) -> ModelSet:
    """One mean-reverting model per graph edge plus a fallback NCV model.

    Edge models carry the edge's mean velocity as their long-run mean; the
    switching matrix keeps ``stickiness`` on the current model, routes
    ``ncv_share`` to the fallback, and spreads the rest over edges sharing a
    node with the current edge.
    """
    if graph.n_edges == 0:
        raise ValueError("traffic graph has no edges")
    models: List[DynamicModel] = []
    for e in graph.edges:
        v_mean = e.mean_speed * np.array([math.sin(e.mean_course),
                                          math.cos(e.mean_course)])
        models.append(OuModel(OUParams(v_mean, theta, sigma)))
    models.append(NcvModel(ncv_q))

    L = graph.n_edges
    n = L + 1
    T = np.zeros((n, n))
    for a, ea in enumerate(graph.edges):
        T[a, a] = stickiness
        T[a, L] = ncv_share
        nodes_a = {ea.i, ea.j}
        adjacent = [b for b, eb in enumerate(graph.edges)
                    if b != a and ({eb.i, eb.j} & nodes_a)]
        rest = 1.0 - stickiness - ncv_share
        if adjacent:
            for b in adjacent:
                T[a, b] = rest / len(adjacent)
        else:
            T[a, a] += rest
    T[L, L] = stickiness
    T[L, :L] = (1.0 - stickiness) / L
    T /= T.sum(axis=1, keepdims=True)
    return ModelSet(models, T)


# ---------------------------------------------------------------------------
# Estimation and pruning


def estimate(targets: Sequence[PotentialTarget], r_detect: float,
             t: float) -> List[TrackEstimate]:
    """Emit state estimates for targets whose existence clears ``r_detect``."""
    out = []
    for tgt in targets:
        if tgt.existence < r_detect:
            continue
        mean = tgt.mean_state()
        out.append(TrackEstimate(
            id=tgt.id, t=t, mmsi=tgt.map_label(),
            px=float(mean[0]), py=float(mean[1]),
            vx=float(mean[2]), vy=float(mean[3]),
            class_idx=int(np.argmax(tgt.class_dist)),
            existence=tgt.existence))
    return out


def prune(targets: Sequence[PotentialTarget], r_prune: float) -> List[PotentialTarget]:
    """Drop targets whose existence fell below ``r_prune``."""
    return [tgt for tgt in targets if tgt.existence >= r_prune and not tgt.degenerate]


# ---------------------------------------------------------------------------
# Scan orchestration


@dataclass
class TrackerConfig:
    n_particles: int = 1000
    p_survive: float = 0.99
    r_detect: float = 0.5
    r_prune: float = 1e-3
    spa_max_iter: int = 200
    spa_tol: float = 1e-6
    resample_frac: float = 0.5
    birth: BirthConfig = field(default_factory=BirthConfig)


class Tracker:
    """Sequential scan processor holding the live set of potential targets.

    Scans must arrive with nondecreasing timestamps; out-of-sequence scans
    are rejected.  The MMSI label universe grows online as identifiers are
    first observed.
    """

    def __init__(self, sensors: Dict[str, SensorModel], model_set: ModelSet,
                 frame: LocalFrame, cfg: Optional[TrackerConfig] = None,
                 seed: int = 0):
        self.sensors = dict(sensors)
        self.model_set = model_set
        self.frame = frame
        self.cfg = cfg or TrackerConfig()
        self.rng = np.random.default_rng(seed)
        self.targets: List[PotentialTarget] = []
        self.known_labels: set = set()
        self.t: Optional[float] = None
        self._next_id = 1

    def process_scan(self, t: float, sensor_id: str,
                     measurements: Sequence[Measurement]) -> List[TrackEstimate]:
        """Run predict / associate / update / birth / prune for one scan and
        return the confirmed estimates."""
        if self.t is not None and t < self.t:
            raise ValueError(f"out-of-sequence scan at t={t} < {self.t}")
        if sensor_id not in self.sensors:
            raise KeyError(f"unknown sensor {sensor_id!r}")
        sensor = self.sensors[sensor_id]
        cfg = self.cfg

        if self.t is not None and t > self.t:
            predict(self.targets, self.model_set, t - self.t, cfg.p_survive, self.rng)
        self.t = t

        for meas in measurements:
            if meas.mmsi is not None:
                self.known_labels.add(meas.mmsi)
        universe = len(self.known_labels) + 1
        expand_label_universe(self.targets, measurements, universe)

        problem = association_weights(self.targets, measurements, sensor,
                                      self.frame, universe)
        spa = spa_associate(problem, cfg.spa_max_iter, cfg.spa_tol)
        update(self.targets, problem, spa, t, self.rng, cfg.resample_frac)
        born = birth(measurements, spa.non_target, sensor, self.frame,
                     cfg.birth, len(self.model_set), cfg.n_particles,
                     self._next_id, t, self.rng)
        self._next_id += len(born)
        self.targets = prune(list(self.targets) + born, cfg.r_prune)
        return estimate(self.targets, cfg.r_detect, t)

    def process_stream(self, measurements: Iterable[Measurement]
                       ) -> List[Tuple[float, List[TrackEstimate]]]:
        """Group a time-sorted measurement stream into per-(time, sensor)
        scans and process them in order."""
        out = []
        for (t, sensor_id), scan in group_scans(measurements):
            out.append((t, self.process_scan(t, sensor_id, scan)))
        return out


def group_scans(measurements: Iterable[Measurement]):
    """Yield ((t, sensor_id), [measurements]) groups in time order."""
    ordered = sorted(measurements, key=lambda m: (m.t, m.sensor_id))
    scan: List[Measurement] = []
    key = None
    for meas in ordered:
        k = (meas.t, meas.sensor_id)
        if key is None or k == key:
            scan.append(meas)
            key = k
        else:
            yield key, scan
            scan = [meas]
            key = k
    if scan:
        yield key, scan
