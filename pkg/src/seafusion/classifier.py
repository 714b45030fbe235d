"""Feed-forward vessel-category classifier over extent features.

A 4-200-100-14 network (rectifier hidden layers, softmax output) maps
standardized (length, width, area, aspect) features to a distribution over
the 14 vessel categories derived from AIS ship types.  Training is plain
mini-batch gradient descent on cross-entropy; gradients are validated
against finite differences in the test suite.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

CATEGORIES = (
    "anti_pollution_law",
    "medical_non_conflict",
    "cargo",
    "dredging_military_sailboat",
    "fishing",
    "high_speed_craft",
    "other_unknown_reserved",
    "passenger",
    "pilot_boat",
    "pleasure",
    "search_and_rescue",
    "tanker",
    "tug_towing",
    "wing_in_ground",
)
N_CLASSES = len(CATEGORIES)

DEFAULT_LAYERS = (4, 200, 100, N_CLASSES)


def category_for_ship_type(code: int) -> str:
    """Map a raw AIS ship-type code to a category name.

    The bucketing is a shipped convention over the standard AIS type-code
    table, not a normative mapping.
    """
    if 20 <= code <= 29:
        return "wing_in_ground"
    if code == 30:
        return "fishing"
    if code in (31, 32, 52):
        return "tug_towing"
    if code in (33, 34, 35, 36):
        return "dredging_military_sailboat"
    if code == 37:
        return "pleasure"
    if 40 <= code <= 49:
        return "high_speed_craft"
    if code == 50:
        return "pilot_boat"
    if code == 51:
        return "search_and_rescue"
    if code in (54, 55):
        return "anti_pollution_law"
    if code == 58:
        return "medical_non_conflict"
    if 60 <= code <= 69:
        return "passenger"
    if 70 <= code <= 79:
        return "cargo"
    if 80 <= code <= 89:
        return "tanker"
    return "other_unknown_reserved"


@dataclass(frozen=True)
class FeatureVector:
    """Extent features of one vessel; canonical orientation has length >= width."""

    length: float
    width: float
    area: Optional[float] = None
    aspect: Optional[float] = None

    def __post_init__(self):
        length, width = self.length, self.width
        if not (math.isfinite(length) and math.isfinite(width)) or length <= 0 or width <= 0:
            raise ValueError("length and width must be positive and finite")
        if width > length:
            length, width = width, length
        object.__setattr__(self, "length", float(length))
        object.__setattr__(self, "width", float(width))
        area = self.area if self.area is not None else length * width
        aspect = self.aspect if self.aspect is not None else length / width
        if not math.isfinite(area) or area <= 0 or not math.isfinite(aspect) or aspect < 1.0:
            raise ValueError("invalid area or aspect")
        object.__setattr__(self, "area", float(area))
        object.__setattr__(self, "aspect", float(aspect))

    def as_array(self) -> np.ndarray:
        return np.array([self.length, self.width, self.area, self.aspect])


@dataclass(frozen=True, eq=False)
class ClassDistribution:
    """Probabilities over CATEGORIES, in fixed order, summing to 1."""

    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if probs.shape != (N_CLASSES,):
            raise ValueError(f"need {N_CLASSES} probabilities")
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-9:
            raise ValueError("probabilities must be nonnegative and sum to 1")
        object.__setattr__(self, "probs", probs)

    @property
    def argmax(self) -> int:
        return int(np.argmax(self.probs))

    @property
    def argmax_name(self) -> str:
        return CATEGORIES[self.argmax]


class Network:
    """Weights, biases, and feature standardization of the classifier."""

    def __init__(self, weights: List[np.ndarray], biases: List[np.ndarray],
                 feat_mean: Optional[np.ndarray] = None,
                 feat_scale: Optional[np.ndarray] = None):
        self.weights = [np.asarray(w, dtype=float) for w in weights]
        self.biases = [np.asarray(b, dtype=float) for b in biases]
        n_in = self.weights[0].shape[0]
        self.feat_mean = np.zeros(n_in) if feat_mean is None else np.asarray(feat_mean, float)
        self.feat_scale = np.ones(n_in) if feat_scale is None else np.asarray(feat_scale, float)

    @property
    def layer_sizes(self) -> Tuple[int, ...]:
        return tuple([self.weights[0].shape[0]] + [w.shape[1] for w in self.weights])

    @classmethod
    def zeros(cls, layer_sizes: Sequence[int] = DEFAULT_LAYERS) -> "Network":
        """All-zero network (test hook): classify is uniform for any input."""
        weights = [np.zeros((a, b)) for a, b in zip(layer_sizes, layer_sizes[1:])]
        biases = [np.zeros(b) for b in layer_sizes[1:]]
        return cls(weights, biases)


def init_network(seed: int, layer_sizes: Sequence[int] = DEFAULT_LAYERS) -> Network:
    """Random network with weights scaled by 1/sqrt(fan-in); deterministic per seed."""
    rng = np.random.default_rng(seed)
    weights = []
    biases = []
    for a, b in zip(layer_sizes, layer_sizes[1:]):
        weights.append(rng.normal(0.0, 1.0 / math.sqrt(a), size=(a, b)))
        biases.append(np.zeros(b))
    return Network(weights, biases)


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _forward(net: Network, x_std: np.ndarray):
    """Forward pass on standardized inputs; returns (probs, activations, preacts)."""
    acts = [x_std]
    pre = []
    h = x_std
    n_layers = len(net.weights)
    for li, (W, b) in enumerate(zip(net.weights, net.biases)):
        z = h @ W + b
        pre.append(z)
        h = _softmax(z) if li == n_layers - 1 else np.maximum(z, 0.0)
        acts.append(h)
    return acts[-1], acts, pre


def _standardize(net: Network, X: np.ndarray) -> np.ndarray:
    return (X - net.feat_mean) / net.feat_scale


def classify(net: Network, features: FeatureVector) -> ClassDistribution:
    """Forward pass for one feature vector."""
    x = features.as_array()
    probs, _, _ = _forward(net, _standardize(net, x[None, :]))
    return ClassDistribution(probs[0])


def classify_batch(net: Network, X: np.ndarray) -> np.ndarray:
    """Forward pass for an (n, 4) raw feature array; returns (n, 14) probs."""
    probs, _, _ = _forward(net, _standardize(net, np.asarray(X, dtype=float)))
    return probs


def loss_and_gradients(net: Network, X_std: np.ndarray, y: np.ndarray):
    """Mean cross-entropy and its gradients on standardized inputs.

    Backpropagation through the rectifier layers and the softmax/cross-entropy
    output (whose combined preactivation gradient is probs - onehot).
    """
    n = len(X_std)
    probs, acts, pre = _forward(net, X_std)
    eps = 1e-12
    loss = -float(np.mean(np.log(probs[np.arange(n), y] + eps)))

    delta = probs.copy()
    delta[np.arange(n), y] -= 1.0
    delta /= n
    grads_w = [None] * len(net.weights)
    grads_b = [None] * len(net.biases)
    for li in range(len(net.weights) - 1, -1, -1):
        grads_w[li] = acts[li].T @ delta
        grads_b[li] = delta.sum(axis=0)
        if li > 0:
            delta = (delta @ net.weights[li].T) * (pre[li - 1] > 0.0)
    return loss, grads_w, grads_b


def train(net: Network, dataset: Sequence[Tuple[FeatureVector, int]],
          epochs: int, lr: float, batch: int = 64,
          seed: int = 0) -> Tuple[Network, List[float]]:
    """Mini-batch gradient descent on cross-entropy.

    Feature means/scales are fit on the dataset and stored in the returned
    network, so inference standardizes identically.  Returns the trained
    network and the per-epoch mean cross-entropy.  Raises if the loss goes
    non-finite (typically a too-large learning rate).
    """
    if not dataset:
        raise ValueError("dataset must be non-empty")
    X = np.stack([f.as_array() for f, _ in dataset])
    y = np.array([c for _, c in dataset], dtype=int)
    if np.any(y < 0) or np.any(y >= net.layer_sizes[-1]):
        raise ValueError("class labels out of range")

    feat_mean = X.mean(axis=0)
    feat_scale = X.std(axis=0)
    feat_scale[feat_scale == 0.0] = 1.0
    out = Network([w.copy() for w in net.weights], [b.copy() for b in net.biases],
                  feat_mean, feat_scale)
    X_std = _standardize(out, X)

    rng = np.random.default_rng(seed)
    n = len(X_std)
    losses: List[float] = []
    for _ in range(epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, batch):
            sel = order[start:start + batch]
            loss, gw, gb = loss_and_gradients(out, X_std[sel], y[sel])
            if not math.isfinite(loss):
                raise ArithmeticError(
                    "training diverged (non-finite loss); try a smaller lr")
            epoch_loss += loss * len(sel)
            for li in range(len(out.weights)):
                out.weights[li] -= lr * gw[li]
                out.biases[li] -= lr * gb[li]
        losses.append(epoch_loss / n)
    return out, losses


# --------------------------------------------------------------------------
# Model file I/O


def save_model(net: Network, path: str) -> None:
    doc = {
        "layer_sizes": list(net.layer_sizes),
        "weights": [w.reshape(-1).tolist() for w in net.weights],
        "biases": [b.tolist() for b in net.biases],
        "feature_means": net.feat_mean.tolist(),
        "feature_scales": net.feat_scale.tolist(),
        "categories": list(CATEGORIES),
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_model(path: str) -> Network:
    with open(path) as fh:
        doc = json.load(fh)
    sizes = doc["layer_sizes"]
    weights = [np.asarray(flat, dtype=float).reshape(a, b)
               for flat, a, b in zip(doc["weights"], sizes, sizes[1:])]
    biases = [np.asarray(b, dtype=float) for b in doc["biases"]]
    return Network(weights, biases,
                   np.asarray(doc["feature_means"], dtype=float),
                   np.asarray(doc["feature_scales"], dtype=float))
