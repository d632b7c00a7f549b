"""L2-regularized logistic regression on standardized features."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from segiqr.detector.dataset import FeatureDataset
from segiqr.errors import ConfigError, NumericError


@dataclass
class LogisticHyper:
    lr: float = 0.5
    epochs: int = 300
    l2: float = 1e-4


@dataclass
class LogisticModel:
    weights: np.ndarray
    bias: float
    mean: np.ndarray
    scale: np.ndarray
    hyper: LogisticHyper = field(default_factory=LogisticHyper)

    def scores(self, features: np.ndarray) -> np.ndarray:
        """Probability of the adversarial class."""
        features = np.asarray(features, dtype=np.float64)
        if features.shape[1] != len(self.weights):
            raise ConfigError(
                f"model expects {len(self.weights)} features, got {features.shape[1]}"
            )
        z = ((features - self.mean) / self.scale) @ self.weights + self.bias
        return _sigmoid(z)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    e = np.exp(z[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def logistic_loss(weights, bias, x, y, l2: float) -> float:
    z = x @ weights + bias
    # log(1 + exp(-|z|)) + max(z, 0) - z*y is the stable split
    loss = np.log1p(np.exp(-np.abs(z))) + np.maximum(z, 0) - z * y
    return float(loss.mean() + 0.5 * l2 * (weights @ weights))


def logistic_gradient(weights, bias, x, y, l2: float):
    p = _sigmoid(x @ weights + bias)
    gw = x.T @ (p - y) / len(y) + l2 * weights
    gb = float((p - y).mean())
    return gw, gb


def train_logistic(train: FeatureDataset, hyper: LogisticHyper | None = None) -> LogisticModel:
    """Full-batch gradient descent from a zero initialization.

    Standardization statistics come from the training split only.
    """
    hyper = hyper or LogisticHyper()
    if len(np.unique(train.labels)) < 2:
        raise ConfigError("training set must contain both classes")
    x = train.features.astype(np.float64)
    mean = x.mean(axis=0)
    std = x.std(axis=0)
    scale = np.where(std < 1e-12, 1.0, std)
    xs = (x - mean) / scale
    y = train.labels.astype(np.float64)
    w = np.zeros(x.shape[1])
    b = 0.0
    for _ in range(hyper.epochs):
        gw, gb = logistic_gradient(w, b, xs, y, hyper.l2)
        w -= hyper.lr * gw
        b -= hyper.lr * gb
    if not (np.isfinite(w).all() and np.isfinite(b)):
        raise NumericError("logistic training diverged to non-finite parameters")
    return LogisticModel(weights=w, bias=b, mean=mean, scale=scale, hyper=hyper)
