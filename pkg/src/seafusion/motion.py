"""Planar motion models with exact discrete-time Gaussian transitions.

Two model families are provided:

- Mean-reverting velocity (Ornstein-Uhlenbeck): per axis,
  ``dv = theta * (v_mean - v) dt + sigma dW`` with position integrating the
  velocity.  The discrete transition over any ``dt`` is Gaussian with
  closed-form moments (derived by integrating the linear SDE):

  ==================  =====================================================
  quantity            value (per axis, with ``a = exp(-theta*dt)``)
  ==================  =====================================================
  E[v']               ``v_mean + a * (v - v_mean)``
  E[p']               ``p + v_mean*dt + (1-a)/theta * (v - v_mean)``
  Var(v')             ``sigma^2 * (1 - a^2) / (2*theta)``
  Cov(p', v')         ``sigma^2 * (1 - a)^2 / (2*theta^2)``
  Var(p')             ``sigma^2/theta^2 * (dt - 2(1-a)/theta + (1-a^2)/(2*theta))``
  ==================  =====================================================

- Nearly constant velocity (white-noise acceleration with intensity ``q``),
  which is the ``theta -> 0`` limit of the above with ``q = sigma^2``.

Axes are decoupled (diagonal theta/sigma); states are ``[px, py, vx, vy]``
in a local east-north frame, time in seconds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Tuple, Union

import numpy as np


@dataclass(frozen=True)
class KinematicState:
    """Position-velocity state in a local frame: meters, meters/second."""

    px: float
    py: float
    vx: float
    vy: float
    t: float = 0.0

    def __post_init__(self):
        for name in ("px", "py", "vx", "vy", "t"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"non-finite state component {name}")

    def as_vector(self) -> np.ndarray:
        return np.array([self.px, self.py, self.vx, self.vy])


def _pair(value, name: str) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    if arr.size == 1:
        arr = np.full(2, float(arr[0]))
    if arr.shape != (2,):
        raise ValueError(f"{name} must be a scalar or 2-vector")
    return arr


@dataclass(frozen=True, eq=False)
class OUParams:
    """Mean-reverting velocity model parameters.

    ``v_mean`` is the long-run mean velocity (m/s, east-north), ``theta`` the
    per-second reversion rate (> 0, scalar or per-axis), ``sigma`` the noise
    intensity (>= 0, scalar or per-axis).
    """

    v_mean: np.ndarray
    theta: np.ndarray
    sigma: np.ndarray

    def __init__(self, v_mean, theta, sigma):
        object.__setattr__(self, "v_mean", _pair(v_mean, "v_mean"))
        object.__setattr__(self, "theta", _pair(theta, "theta"))
        object.__setattr__(self, "sigma", _pair(sigma, "sigma"))
        if np.any(self.theta <= 0.0):
            raise ValueError("theta must be positive")
        if np.any(self.sigma < 0.0):
            raise ValueError("sigma must be nonnegative")

    def stationary_velocity_var(self) -> np.ndarray:
        """Per-axis stationary velocity variance sigma^2 / (2*theta)."""
        return self.sigma**2 / (2.0 * self.theta)


def _ou_bracket(x: float) -> float:
    """Numerically stable ``x - 2(1-e^-x) + (1-e^-2x)/2``.

    The direct form cancels catastrophically for small x (the result is
    O(x^3) built from O(x) terms), so a series is used below x = 0.5.
    """
    if x < 0.5:
        total = 0.0
        term_fact = 2.0  # n! running value, starts at n=3 below
        for n in range(3, 24):
            term_fact *= n
            c = (2.0 * (-1.0) ** n - 0.5 * (-2.0) ** n) / term_fact
            total += c * x**n
        return total
    return x - 2.0 * (-math.expm1(-x)) + 0.5 * (-math.expm1(-2.0 * x))


def ou_axis_factors(theta: float, sigma: float, v_mean: float, dt: float):
    """Per-axis affine-Gaussian transition ``[p', v'] = F [p, v] + c + w``.

    Returns ``(F, c, Q)`` with F 2x2, c length-2, Q 2x2 for one axis of the
    mean-reverting model.
    """
    x = theta * dt
    a = math.exp(-x)
    b = -math.expm1(-x)  # 1 - a, accurate for small x
    F = np.array([[1.0, b / theta], [0.0, a]])
    c = np.array([v_mean * (dt - b / theta), v_mean * b])
    s2 = sigma * sigma
    qvv = s2 * (-math.expm1(-2.0 * x)) / (2.0 * theta)
    qpv = s2 * b * b / (2.0 * theta * theta)
    qpp = s2 * _ou_bracket(x) / theta**3
    Q = np.array([[qpp, qpv], [qpv, qvv]])
    return F, c, Q


def ncv_axis_factors(q: float, dt: float):
    """Per-axis white-noise-acceleration transition factors ``(F, c, Q)``."""
    F = np.array([[1.0, dt], [0.0, 1.0]])
    c = np.zeros(2)
    Q = q * np.array([[dt**3 / 3.0, dt**2 / 2.0], [dt**2 / 2.0, dt]])
    return F, c, Q


def _assemble(state: KinematicState, factors_x, factors_y) -> Tuple[np.ndarray, np.ndarray]:
    """Combine per-axis (F, c, Q) into a [px, py, vx, vy] mean and covariance."""
    mean = np.empty(4)
    cov = np.zeros((4, 4))
    for axis, (F, c, Q), p, v in ((0, factors_x, state.px, state.vx),
                                  (1, factors_y, state.py, state.vy)):
        m = F @ np.array([p, v]) + c
        mean[axis] = m[0]
        mean[axis + 2] = m[1]
        cov[axis, axis] = Q[0, 0]
        cov[axis, axis + 2] = cov[axis + 2, axis] = Q[0, 1]
        cov[axis + 2, axis + 2] = Q[1, 1]
    return mean, cov


def ou_transition(state: KinematicState, params: OUParams, dt: float) -> Tuple[np.ndarray, np.ndarray]:
    """Exact Gaussian transition of the mean-reverting model over ``dt`` > 0.

    Returns (mean, cov) for the state ``[px, py, vx, vy]`` after ``dt``
    seconds.  The covariance is symmetric positive semidefinite for all
    valid parameters.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    fx = ou_axis_factors(params.theta[0], params.sigma[0], params.v_mean[0], dt)
    fy = ou_axis_factors(params.theta[1], params.sigma[1], params.v_mean[1], dt)
    return _assemble(state, fx, fy)


def ncv_transition(state: KinematicState, q: float, dt: float) -> Tuple[np.ndarray, np.ndarray]:
    """Exact Gaussian transition of the nearly-constant-velocity model."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if q < 0.0:
        raise ValueError("q must be nonnegative")
    f = ncv_axis_factors(q, dt)
    return _assemble(state, f, f)


def _chol2(Q: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor of a 2x2 PSD matrix, tolerating zeros."""
    l11 = math.sqrt(max(Q[0, 0], 0.0))
    l21 = Q[0, 1] / l11 if l11 > 0.0 else 0.0
    l22 = math.sqrt(max(Q[1, 1] - l21 * l21, 0.0))
    return np.array([[l11, 0.0], [l21, l22]])


def ou_sample(state: KinematicState, params: OUParams, dt: float, seed) -> KinematicState:
    """Draw one state from the transition Gaussian; deterministic per seed.

    ``seed`` may be an int or a ``numpy.random.Generator``.  With zero noise
    intensity the sample equals the transition mean exactly.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    rng = np.random.default_rng(seed)
    out = np.empty(4)
    for axis, p, v in ((0, state.px, state.vx), (1, state.py, state.vy)):
        F, c, Q = ou_axis_factors(params.theta[axis], params.sigma[axis],
                                  params.v_mean[axis], dt)
        m = F @ np.array([p, v]) + c
        if params.sigma[axis] == 0.0:
            s = m
        else:
            s = m + _chol2(Q) @ rng.standard_normal(2)
        out[axis], out[axis + 2] = s
    return KinematicState(out[0], out[1], out[2], out[3], state.t + dt)


@dataclass(frozen=True, eq=False)
class NcvModel:
    """Nearly-constant-velocity descriptor (process-noise intensity q >= 0)."""

    q: float

    def __post_init__(self):
        if self.q < 0.0:
            raise ValueError("q must be nonnegative")

    def axis_factors(self, axis: int, dt: float):
        return ncv_axis_factors(self.q, dt)


@dataclass(frozen=True, eq=False)
class OuModel:
    """Mean-reverting descriptor wrapping :class:`OUParams`."""

    params: OUParams

    def axis_factors(self, axis: int, dt: float):
        p = self.params
        return ou_axis_factors(p.theta[axis], p.sigma[axis], p.v_mean[axis], dt)


DynamicModel = Union[NcvModel, OuModel]


@dataclass(frozen=True, eq=False)
class ModelSet:
    """Ordered dynamic models plus a row-stochastic switching matrix."""

    models: Tuple[DynamicModel, ...]
    transition_matrix: np.ndarray

    def __init__(self, models: Sequence[DynamicModel], transition_matrix):
        models = tuple(models)
        if not models:
            raise ValueError("model set needs at least one model")
        T = np.asarray(transition_matrix, dtype=float)
        n = len(models)
        if T.shape != (n, n):
            raise ValueError(f"transition matrix must be {n}x{n}")
        if np.any(T < 0.0) or np.any(np.abs(T.sum(axis=1) - 1.0) > 1e-12):
            raise ValueError("transition matrix rows must be stochastic")
        object.__setattr__(self, "models", models)
        object.__setattr__(self, "transition_matrix", T)

    def __len__(self) -> int:
        return len(self.models)

    @classmethod
    def single(cls, model: DynamicModel) -> "ModelSet":
        return cls((model,), np.ones((1, 1)))


def propagate_states(states: np.ndarray, model: DynamicModel, dt: float,
                     rng: np.random.Generator) -> np.ndarray:
    """Propagate an (n, 4) state array one transition of ``model``.

    Each row is an independent draw from the transition Gaussian; the affine
    structure makes this a matrix op plus one Cholesky-shaped noise draw per
    axis.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    states = np.asarray(states, dtype=float)
    out = np.empty_like(states)
    n = states.shape[0]
    for axis in (0, 1):
        F, c, Q = model.axis_factors(axis, dt)
        pv = states[:, (axis, axis + 2)]
        m = pv @ F.T + c
        if Q[0, 0] > 0.0 or Q[1, 1] > 0.0:
            m = m + rng.standard_normal((n, 2)) @ _chol2(Q).T
        out[:, axis] = m[:, 0]
        out[:, axis + 2] = m[:, 1]
    return out
