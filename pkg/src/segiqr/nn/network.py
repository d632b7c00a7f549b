"""Network construction, forward propagation with taps, and input gradients."""

from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np

from segiqr.errors import ConfigError, NumericError
from segiqr.nn.config import ArchConfig
from segiqr.nn.layers import LAYER_KINDS, Softmax, softmax


class PassCounter:
    """Counts single-image forward propagations; a batched call adds N."""

    def __init__(self):
        self._lock = threading.Lock()
        self._count = 0

    def add(self, n: int):
        with self._lock:
            self._count += n

    def reset(self):
        with self._lock:
            self._count = 0

    @property
    def value(self) -> int:
        with self._lock:
            return self._count


@dataclass
class ForwardResult:
    logits: np.ndarray
    probs: np.ndarray
    trace: dict[int, np.ndarray]


class Network:
    """An ordered layer stack with shape-checked construction.

    Weights are mutated only by the trainer, which operates on a private
    clone, so forward/gradient calls on one instance are safe to run from
    multiple threads concurrently.
    """

    def __init__(self, arch: ArchConfig, seed: int = 0):
        self.arch = arch
        self.layers = []
        self.shapes = []  # per-image output shape of each layer
        shape = arch.input_shape
        for i, spec in enumerate(arch.layers):
            kw = {k: v for k, v in spec.items() if k != "kind"}
            layer = LAYER_KINDS[spec["kind"]](i, **kw)
            shape = layer.out_shape(shape)
            self.layers.append(layer)
            self.shapes.append(shape)
        if len(shape) != 1 or shape[0] != arch.class_count:
            raise ConfigError(
                f"final layer produces shape {shape}, expected ({arch.class_count},) logits"
            )
        self.softmax_index = len(self.layers) - 1 if isinstance(self.layers[-1], Softmax) else None
        rng = np.random.default_rng(seed)
        self.params = [layer.init_params(rng, in_shape)
                       for layer, in_shape in zip(self.layers, [arch.input_shape] + self.shapes[:-1])]
        self.pass_counter = PassCounter()

    # -- introspection -------------------------------------------------

    @property
    def input_shape(self):
        return self.arch.input_shape

    @property
    def class_count(self):
        return self.arch.class_count

    def count_parameters(self) -> int:
        return sum(int(t.size) for p in self.params for t in p.values())

    def layer_size(self, layer_id: int) -> int:
        return int(np.prod(self.shapes[layer_id]))

    def clone(self) -> "Network":
        other = Network.__new__(Network)
        other.arch = self.arch
        other.layers = self.layers
        other.shapes = self.shapes
        other.softmax_index = self.softmax_index
        other.params = [{k: v.copy() for k, v in p.items()} for p in self.params]
        other.pass_counter = PassCounter()
        return other

    # -- forward -------------------------------------------------------

    def _check_batch(self, batch: np.ndarray) -> np.ndarray:
        batch = np.asarray(batch, dtype=np.float32)
        if batch.ndim != 4 or batch.shape[1:] != self.input_shape:
            raise ConfigError(
                f"batch shape {batch.shape} does not match input shape {self.input_shape}"
            )
        if not np.isfinite(batch).all():
            raise NumericError("batch contains non-finite values")
        return batch

    def forward(self, batch: np.ndarray, taps=()) -> ForwardResult:
        """Propagate a batch; retains activations for the requested layer ids.

        probs is always the softmax of the logits; when the config ends in an
        explicit softmax layer the logits are that layer's input.
        """
        batch = self._check_batch(batch)
        taps = frozenset(taps)
        for t in taps:
            if not (isinstance(t, (int, np.integer)) and 0 <= t < len(self.layers)):
                raise ConfigError(f"unknown tap layer id {t!r}")
        x = batch
        trace = {}
        logits = None
        for i, layer in enumerate(self.layers):
            if i == self.softmax_index:
                logits = x
            x, _ = layer.forward(x, self.params[i], need_cache=False)
            if i in taps:
                trace[i] = x
        if self.softmax_index is None:
            logits = x
            probs = softmax(logits)
        else:
            probs = x
        if not np.isfinite(logits).all():
            raise NumericError("forward produced non-finite logits")
        self.pass_counter.add(batch.shape[0])
        return ForwardResult(logits=logits, probs=probs, trace=trace)

    def predict(self, batch: np.ndarray) -> np.ndarray:
        return self.forward(batch).logits.argmax(axis=1)

    # -- gradients -----------------------------------------------------

    def _forward_cached(self, batch: np.ndarray):
        """Forward pass retaining per-layer caches up to the logits."""
        x = batch
        caches = []
        last = len(self.layers) if self.softmax_index is None else self.softmax_index
        for i in range(last):
            x, cache = self.layers[i].forward(x, self.params[i], need_cache=True)
            caches.append(cache)
        self.pass_counter.add(batch.shape[0])
        return x, caches

    def _backward(self, dlogits: np.ndarray, caches, want_param_grads: bool):
        dx = dlogits
        param_grads = [None] * len(self.layers)
        for i in range(len(caches) - 1, -1, -1):
            dx, grads = self.layers[i].backward(dx, self.params[i], caches[i])
            if want_param_grads:
                param_grads[i] = grads
        return dx, param_grads

    def loss_and_param_grads(self, batch: np.ndarray, labels: np.ndarray):
        """Mean cross-entropy over the batch and gradients for every trainable tensor."""
        batch = self._check_batch(batch)
        labels = _check_labels(labels, batch.shape[0], self.class_count)
        logits, caches = self._forward_cached(batch)
        losses = cross_entropy_from_logits(logits, labels)
        dlogits = (softmax(logits) - _one_hot(labels, self.class_count)) / np.float32(batch.shape[0])
        _, param_grads = self._backward(dlogits, caches, want_param_grads=True)
        return float(losses.mean()), param_grads

    def input_gradient(self, batch: np.ndarray, labels: np.ndarray) -> np.ndarray:
        """Gradient of each sample's cross-entropy loss w.r.t. its own pixels."""
        batch = self._check_batch(batch)
        labels = _check_labels(labels, batch.shape[0], self.class_count)
        logits, caches = self._forward_cached(batch)
        dlogits = softmax(logits) - _one_hot(labels, self.class_count)
        dx, _ = self._backward(dlogits, caches, want_param_grads=False)
        if not np.isfinite(dx).all():
            raise NumericError("input gradient contains non-finite values")
        return dx

    def logit_gradient(self, batch: np.ndarray, class_index: int) -> np.ndarray:
        """Gradient of the pre-softmax logit of one class w.r.t. each sample's pixels."""
        batch = self._check_batch(batch)
        if not 0 <= int(class_index) < self.class_count:
            raise ConfigError(f"class index {class_index} out of range [0, {self.class_count})")
        _, caches = self._forward_cached(batch)
        dlogits = np.zeros((batch.shape[0], self.class_count), dtype=np.float32)
        dlogits[:, int(class_index)] = 1.0
        dx, _ = self._backward(dlogits, caches, want_param_grads=False)
        return dx

    def class_logit_gradients(self, image: np.ndarray):
        """Logits and per-class input gradients for a single image.

        Shares one cached forward across the class_count backward sweeps.
        """
        batch = self._check_batch(image[None] if image.ndim == 3 else image)
        logits, caches = self._forward_cached(batch)
        grads = np.empty((self.class_count,) + self.input_shape, dtype=np.float32)
        for k in range(self.class_count):
            dlogits = np.zeros((1, self.class_count), dtype=np.float32)
            dlogits[0, k] = 1.0
            dx, _ = self._backward(dlogits, caches, want_param_grads=False)
            grads[k] = dx[0]
        return logits[0], grads


def build_network(arch: ArchConfig, seed: int = 0) -> Network:
    """Shape-checked network with seeded He-uniform initialization.

    When the config carries a parameter_count header it must match the
    built network exactly.
    """
    net = Network(arch, seed=seed)
    if arch.parameter_count is not None and net.count_parameters() != arch.parameter_count:
        raise ConfigError(
            f"config declares {arch.parameter_count} parameters "
            f"but the network has {net.count_parameters()}"
        )
    return net


def cross_entropy_from_logits(logits: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Per-sample cross-entropy via a stable log-softmax."""
    z = logits - logits.max(axis=1, keepdims=True)
    log_probs = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    return -log_probs[np.arange(len(labels)), labels]


def _one_hot(labels: np.ndarray, classes: int) -> np.ndarray:
    out = np.zeros((len(labels), classes), dtype=np.float32)
    out[np.arange(len(labels)), labels] = 1.0
    return out


def _check_labels(labels, n: int, classes: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape != (n,):
        raise ConfigError(f"labels shape {labels.shape} does not match batch size {n}")
    if labels.size and (labels.min() < 0 or labels.max() >= classes):
        raise ConfigError(f"labels must lie in [0, {classes})")
    return labels
