"""Figure rendering for evaluation reports and extracted traffic graphs.

All renderers write PNG files next to the delimited outputs; the CSV/JSON
artifacts remain the canonical machine-readable results.
"""

from __future__ import annotations

import math
from typing import List, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .metrics import RocPoint, ScanMetrics
from .traffic import TrafficGraph


def plot_gospa_timeseries(per_scan: Sequence[ScanMetrics], path: str) -> None:
    t = [s.t for s in per_scan]
    fig, ax = plt.subplots(figsize=(8, 4.5))
    ax.plot(t, [s.gospa.total for s in per_scan], label="total", lw=1.8)
    ax.plot(t, [s.gospa.localization for s in per_scan], label="localization", lw=1.0)
    ax.plot(t, [s.gospa.missed for s in per_scan], label="missed", lw=1.0)
    ax.plot(t, [s.gospa.false for s in per_scan], label="false", lw=1.0)
    ax.set_xlabel("time [s]")
    ax.set_ylabel("GOSPA [m]")
    ax.legend(loc="upper right", fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def plot_cardinality(per_scan: Sequence[ScanMetrics], path: str) -> None:
    t = [s.t for s in per_scan]
    fig, ax = plt.subplots(figsize=(8, 3.2))
    ax.step(t, [s.k_true for s in per_scan], where="post", label="true", lw=1.8)
    ax.step(t, [s.k_est for s in per_scan], where="post", label="estimated", lw=1.2)
    ax.set_xlabel("time [s]")
    ax.set_ylabel("targets")
    ax.legend(loc="upper right", fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def plot_roc(points: Sequence[RocPoint], path: str) -> None:
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    ax.plot([p.far for p in points], [p.tpr for p in points], marker=".", lw=1.2)
    ax.plot([0, 1], [0, 1], ls="--", c="gray", lw=0.8)
    ax.set_xlabel("false-alarm rate")
    ax.set_ylabel("detection rate")
    ax.set_xlim(-0.02, 1.02)
    ax.set_ylim(-0.02, 1.02)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def plot_traffic_graph(graph: TrafficGraph, path: str) -> None:
    fig, ax = plt.subplots(figsize=(7, 6))
    lats = [n.centroid.lat for n in graph.nodes]
    lons = [n.centroid.lon for n in graph.nodes]
    wmax = max((e.weight for e in graph.edges), default=1)
    for e in graph.edges:
        a, b = graph.nodes[e.i], graph.nodes[e.j]
        ax.annotate(
            "", xy=(b.centroid.lon, b.centroid.lat),
            xytext=(a.centroid.lon, a.centroid.lat),
            arrowprops=dict(arrowstyle="-|>", lw=0.6 + 2.4 * e.weight / wmax,
                            color="tab:blue", alpha=0.8))
    ax.scatter(lons, lats, s=45, c="tab:red", zorder=3)
    for n in graph.nodes:
        ax.annotate(f"{n.id}", (n.centroid.lon, n.centroid.lat),
                    textcoords="offset points", xytext=(4, 4), fontsize=8)
    ax.set_xlabel("longitude [deg]")
    ax.set_ylabel("latitude [deg]")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
