"""Minimal SGD-with-momentum trainer.

Good enough to take the desk-scale reference net to usable accuracy on
32x32 inputs; not meant to chase state-of-the-art numbers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from segiqr.errors import ConfigError
from segiqr.nn.network import Network, cross_entropy_from_logits


@dataclass
class TrainHyper:
    lr: float = 0.02
    momentum: float = 0.9
    epochs: int = 5
    batch_size: int = 64
    seed: int = 0


def evaluate_loss(net: Network, images: np.ndarray, labels: np.ndarray, batch_size: int = 256) -> float:
    total = 0.0
    for start in range(0, len(images), batch_size):
        chunk = images[start:start + batch_size]
        logits = net.forward(chunk).logits
        total += float(cross_entropy_from_logits(logits, labels[start:start + batch_size]).sum())
    return total / len(images)


def evaluate_accuracy(net: Network, images: np.ndarray, labels: np.ndarray, batch_size: int = 256) -> float:
    hits = 0
    for start in range(0, len(images), batch_size):
        preds = net.predict(images[start:start + batch_size])
        hits += int((preds == labels[start:start + batch_size]).sum())
    return hits / len(images)


def train(net: Network, images: np.ndarray, labels: np.ndarray, hyper: TrainHyper,
          on_epoch=None) -> Network:
    """Returns a newly trained copy of `net`; the input network is untouched.

    Shuffling, and therefore the whole run, is a pure function of hyper.seed.
    """
    if len(images) == 0:
        raise ConfigError("cannot train on an empty dataset")
    if len(images) != len(labels):
        raise ConfigError("images and labels disagree on length")
    out = net.clone()
    velocity = [{k: np.zeros_like(v) for k, v in p.items() if k in layer.trainable}
                for layer, p in zip(out.layers, out.params)]
    rng = np.random.default_rng(hyper.seed)
    lr = np.float32(hyper.lr)
    mu = np.float32(hyper.momentum)
    for epoch in range(hyper.epochs):
        order = rng.permutation(len(images))
        epoch_loss = 0.0
        for start in range(0, len(order), hyper.batch_size):
            idx = order[start:start + hyper.batch_size]
            loss, grads = out.loss_and_param_grads(images[idx], labels[idx])
            epoch_loss += loss * len(idx)
            for i, layer in enumerate(out.layers):
                if grads[i] is None:
                    continue
                for name in layer.trainable:
                    v = velocity[i][name]
                    v *= mu
                    v -= lr * grads[i][name]
                    out.params[i][name] += v
        if on_epoch is not None:
            on_epoch(epoch, epoch_loss / len(images))
    return out
