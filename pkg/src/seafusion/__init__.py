"""Maritime surveillance toolkit.

Layers, bottom up:

- ``geo`` / ``motion``: local-frame coordinates and the OU / NCV motion
  models with exact discrete-time Gaussian transitions.
- ``records``: AIS and detection record parsing, track assembly, file
  formats (see FORMATS.md).
- ``traffic``: maritime traffic graph extraction (change-point waypoints,
  DBSCAN clustering, graph build / prune / merge).
- ``tracker``: multisensor multitarget tracker with sum-product data
  association, particle beliefs, existence probabilities, MMSI label and
  class fusion, route-conditioned model sets.
- ``classifier``: feed-forward vessel-category network over extent features.
- ``anomaly``: windowed GLR test for route deviations.
- ``simulator``: scenario generator (ground truth, AIS streams, sensor scans).
- ``metrics`` / ``plots`` / ``cli``: GOSPA and label-accuracy evaluation,
  figure rendering, command-line entry points.
"""

__version__ = "0.1.0"
