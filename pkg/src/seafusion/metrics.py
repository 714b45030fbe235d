"""Multitarget evaluation: GOSPA, label accuracy, cardinality, anomaly ROC.

GOSPA here is the alpha=2 variant: squared... more precisely, for order p
and cutoff c, the metric is

    ( min_assignment [ sum_matched min(d, c)^p  +  (c^p / 2) * n_unmatched ] )^(1/p)

where ``n_unmatched`` counts unassigned truths (missed) plus unassigned
estimates (false).  The reported components are each raised to 1/p so that
``total^p = localization^p + missed^p + false^p``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment


@dataclass(frozen=True)
class GospaResult:
    total: float
    localization: float
    missed: float
    false: float
    n_truth: int
    n_est: int
    assignment: Tuple[Tuple[int, int], ...]  # (truth index, estimate index)


def gospa(truth_xy: np.ndarray, est_xy: np.ndarray, c: float = 500.0,
          p: float = 2.0) -> GospaResult:
    """Optimal-assignment GOSPA between truth and estimate position sets."""
    if c <= 0.0:
        raise ValueError("cutoff c must be positive")
    if p < 1.0:
        raise ValueError("order p must be >= 1")
    truth_xy = np.asarray(truth_xy, dtype=float).reshape(-1, 2)
    est_xy = np.asarray(est_xy, dtype=float).reshape(-1, 2)
    n, m = len(truth_xy), len(est_xy)
    half_cp = c**p / 2.0

    if n == 0 or m == 0:
        missed = (half_cp * n) ** (1 / p)
        false = (half_cp * m) ** (1 / p)
        total = (half_cp * (n + m)) ** (1 / p)
        return GospaResult(total, 0.0, missed, false, n, m, ())

    d = np.linalg.norm(truth_xy[:, None, :] - est_xy[None, :, :], axis=2)
    cost = np.minimum(d, c) ** p
    rows, cols = linear_sum_assignment(cost)

    loc_p = 0.0
    pairs = []
    n_assigned = 0
    for i, j in zip(rows, cols):
        if d[i, j] < c:
            loc_p += d[i, j] ** p
            pairs.append((int(i), int(j)))
            n_assigned += 1
    missed_p = half_cp * (n - n_assigned)
    false_p = half_cp * (m - n_assigned)
    total = (loc_p + missed_p + false_p) ** (1 / p)
    return GospaResult(total, loc_p ** (1 / p), missed_p ** (1 / p),
                       false_p ** (1 / p), n, m, tuple(pairs))


def label_accuracy(scans: Sequence[Tuple[np.ndarray, Sequence[Optional[int]],
                                         np.ndarray, Sequence[int]]],
                   c: float = 500.0) -> Optional[float]:
    """Fraction of MMSI claims that match the nearest truth within the cutoff.

    ``scans`` holds per-scan tuples ``(est_xy, est_mmsi, truth_xy,
    truth_mmsi)``.  Estimates are matched to their nearest truth within
    ``c`` meters; accuracy is correct claims / matched claims.  Returns
    None when no matched estimate claims an identity (undefined, reported
    as absent rather than zero).
    """
    claimed = 0
    correct = 0
    for est_xy, est_mmsi, truth_xy, truth_mmsi in scans:
        est_xy = np.asarray(est_xy, dtype=float).reshape(-1, 2)
        truth_xy = np.asarray(truth_xy, dtype=float).reshape(-1, 2)
        if len(truth_xy) == 0:
            continue
        for j, mmsi in enumerate(est_mmsi):
            if mmsi is None:
                continue
            dists = np.linalg.norm(truth_xy - est_xy[j], axis=1)
            i = int(np.argmin(dists))
            if dists[i] <= c:
                claimed += 1
                if truth_mmsi[i] == mmsi:
                    correct += 1
    if claimed == 0:
        return None
    return correct / claimed


@dataclass
class RocPoint:
    threshold: float
    far: float
    tpr: float


def anomaly_roc(lambdas: Sequence[float], is_anomalous: Sequence[bool]) -> List[RocPoint]:
    """ROC points over the observed statistic values.

    Sweeps the decision threshold over the unique statistic values (plus
    infinity) and reports (false-alarm rate, detection rate) pairs.
    """
    lam = np.asarray(lambdas, dtype=float)
    truth = np.asarray(is_anomalous, dtype=bool)
    n_pos = int(truth.sum())
    n_neg = int((~truth).sum())
    points = []
    thresholds = np.concatenate([[math.inf], np.unique(lam)[::-1]])
    for thr in thresholds:
        flag = lam > thr
        tpr = float((flag & truth).sum() / n_pos) if n_pos else 0.0
        far = float((flag & ~truth).sum() / n_neg) if n_neg else 0.0
        points.append(RocPoint(float(thr), far, tpr))
    return points


# ---------------------------------------------------------------------------
# Scan-level evaluation of an estimate stream against ground truth


@dataclass
class ScanMetrics:
    t: float
    gospa: GospaResult
    k_true: int
    k_est: int


@dataclass
class EvalReport:
    per_scan: List[ScanMetrics]
    label_accuracy: Optional[float]
    timings: Dict[str, float] = field(default_factory=dict)

    @property
    def mean_gospa(self) -> float:
        if not self.per_scan:
            return 0.0
        return float(np.mean([s.gospa.total for s in self.per_scan]))

    def mean_component(self, name: str) -> float:
        if not self.per_scan:
            return 0.0
        return float(np.mean([getattr(s.gospa, name) for s in self.per_scan]))


def evaluate_scans(est_by_scan: Dict[float, List[Tuple[float, float, Optional[int]]]],
                   truth_at, truth_mmsi: Sequence[int], c: float = 500.0,
                   p: float = 2.0) -> EvalReport:
    """Per-scan GOSPA and label accuracy for an estimate stream.

    ``est_by_scan`` maps scan time to [(x, y, mmsi-or-None), ...];
    ``truth_at(t)`` returns the (n_truth, 2) true positions at time t for
    the vessels listed in ``truth_mmsi``.
    """
    per_scan = []
    acc_scans = []
    for t in sorted(est_by_scan):
        ests = est_by_scan[t]
        est_xy = np.array([[e[0], e[1]] for e in ests], dtype=float).reshape(-1, 2)
        est_mmsi = [e[2] for e in ests]
        truth_xy = truth_at(t)
        g = gospa(truth_xy, est_xy, c, p)
        per_scan.append(ScanMetrics(t, g, len(truth_xy), len(est_xy)))
        acc_scans.append((est_xy, est_mmsi, truth_xy, list(truth_mmsi)))
    return EvalReport(per_scan, label_accuracy(acc_scans, c))
