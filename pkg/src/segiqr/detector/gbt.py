"""Gradient-boosted regression trees with logistic loss.

Stage-wise Newton boosting: each round fits a depth-limited tree to the
current gradient/hessian of the logistic loss and adds it with a learning
rate. Split search is exact greedy over presorted feature columns, so the
whole fit is deterministic given the seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from segiqr.detector.dataset import FeatureDataset
from segiqr.detector.logistic import _sigmoid
from segiqr.errors import ConfigError

LAMBDA = 1.0  # L2 on leaf values, keeps them finite on pure nodes
MIN_GAIN = 1e-12


@dataclass
class GbtHyper:
    trees: int = 100
    depth: int = 3
    lr: float = 0.1
    subsample: float = 1.0
    seed: int = 0


@dataclass
class GbtModel:
    base_score: float          # prior log-odds
    trees: list                # nested {feature, threshold, left, right} / {value} dicts
    dimension: int
    hyper: GbtHyper = field(default_factory=GbtHyper)

    def raw_scores(self, features: np.ndarray) -> np.ndarray:
        features = np.asarray(features, dtype=np.float64)
        f = np.full(len(features), self.base_score)
        for tree in self.trees:
            f += self.hyper.lr * _predict_tree(tree, features)
        return f

    def scores(self, features: np.ndarray) -> np.ndarray:
        """Probability of the adversarial class."""
        if np.asarray(features).shape[1] != self.dimension:
            raise ConfigError(
                f"model expects {self.dimension} features, got {np.asarray(features).shape[1]}"
            )
        return _sigmoid(self.raw_scores(features))


def _predict_tree(node: dict, x: np.ndarray) -> np.ndarray:
    out = np.empty(len(x))
    stack = [(node, np.arange(len(x)))]
    while stack:
        nd, idx = stack.pop()
        if "value" in nd:
            out[idx] = nd["value"]
            continue
        left = x[idx, nd["feature"]] <= nd["threshold"]
        stack.append((nd["left"], idx[left]))
        stack.append((nd["right"], idx[~left]))
    return out


def _best_split(x_t, order_t, mask, grad, hess):
    """Exact greedy split over all features for the masked rows.

    x_t/order_t are feature-major (d, n); mask selects this node's rows.
    Returns (gain, feature, threshold) or None. Ties break toward the lowest
    feature index, then the lowest split position.
    """
    m = int(mask.sum())
    if m < 2:
        return None
    sel = mask[order_t]
    idx = order_t[sel].reshape(x_t.shape[0], m)        # per-feature sorted row ids
    xs = np.take_along_axis(x_t, idx, axis=1)
    g = np.cumsum(grad[idx], axis=1)
    h = np.cumsum(hess[idx], axis=1)
    g_tot, h_tot = g[0, -1], h[0, -1]
    gl, hl = g[:, :-1], h[:, :-1]
    gr, hr = g_tot - gl, h_tot - hl
    gain = gl**2 / (hl + LAMBDA) + gr**2 / (hr + LAMBDA) - g_tot**2 / (h_tot + LAMBDA)
    gain[xs[:, 1:] == xs[:, :-1]] = -np.inf          # can't split between equal values
    flat = int(np.argmax(gain))
    feature, pos = divmod(flat, gain.shape[1])
    if gain[feature, pos] <= MIN_GAIN:
        return None
    return float(gain[feature, pos]), int(feature), float(xs[feature, pos])


def _build_tree(x_t, order_t, mask, grad, hess, depth: int) -> dict:
    g_sum = float(grad[mask].sum())
    h_sum = float(hess[mask].sum())
    leaf = {"value": -g_sum / (h_sum + LAMBDA)}
    if depth == 0:
        return leaf
    split = _best_split(x_t, order_t, mask, grad, hess)
    if split is None:
        return leaf
    _, feature, threshold = split
    left = mask & (x_t[feature] <= threshold)
    right = mask & ~(x_t[feature] <= threshold)
    if not left.any() or not right.any():
        return leaf
    return {
        "feature": feature,
        "threshold": threshold,
        "left": _build_tree(x_t, order_t, left, grad, hess, depth - 1),
        "right": _build_tree(x_t, order_t, right, grad, hess, depth - 1),
    }


def train_gbt(train: FeatureDataset, hyper: GbtHyper | None = None) -> GbtModel:
    hyper = hyper or GbtHyper()
    if len(np.unique(train.labels)) < 2:
        raise ConfigError("training set must contain both classes")
    if not 0.0 < hyper.subsample <= 1.0:
        raise ConfigError("subsample must lie in (0, 1]")
    x = train.features.astype(np.float64)
    y = train.labels.astype(np.float64)
    n = len(y)
    x_t = np.ascontiguousarray(x.T)
    order_t = np.argsort(x_t, axis=1, kind="stable")
    p0 = min(max(float(y.mean()), 1e-6), 1.0 - 1e-6)
    base = float(np.log(p0 / (1.0 - p0)))
    f = np.full(n, base)
    rng = np.random.default_rng(hyper.seed)
    trees = []
    for _ in range(hyper.trees):
        p = _sigmoid(f)
        grad = p - y
        hess = p * (1.0 - p)
        mask = np.ones(n, dtype=bool)
        if hyper.subsample < 1.0:
            keep = rng.choice(n, size=max(2, int(round(hyper.subsample * n))), replace=False)
            mask = np.zeros(n, dtype=bool)
            mask[keep] = True
        tree = _build_tree(x_t, order_t, mask, grad, hess, hyper.depth)
        trees.append(tree)
        f += hyper.lr * _predict_tree(tree, x)
    return GbtModel(base_score=base, trees=trees, dimension=x.shape[1], hyper=hyper)
