"""Tap selection: which network nodes the occlusion sweep records.

Three modes: "1d" reads only the softmax probability of the image's
predicted class, "output" reads the whole softmax layer, and "multilayer"
reads the softmax layer plus seeded random nodes from the last N layers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from segiqr.errors import ConfigError
from segiqr.nn.network import Network

MODES = ("1d", "output", "multilayer")


@dataclass(frozen=True)
class TapSet:
    mode: str
    entries: tuple[tuple[int, int], ...]  # (layer id, flat node index); empty for 1d
    seed: int | None = None
    per_layer_count: int | None = None
    last_n_layers: int | None = None

    @property
    def dimension(self) -> int:
        return 1 if self.mode == "1d" else len(self.entries)

    def describe(self) -> dict:
        out = {"mode": self.mode, "dimension": self.dimension}
        if self.mode == "multilayer":
            out.update(seed=self.seed, per_layer_count=self.per_layer_count,
                       last_n_layers=self.last_n_layers)
        return out


def _softmax_layer(net: Network) -> int:
    if net.softmax_index is None:
        raise ConfigError("tap selection needs a network whose final layer is softmax")
    return net.softmax_index


def select_taps(net: Network, mode: str, per_layer_count: int | None = None,
                last_n_layers: int | None = None, seed: int | None = None) -> TapSet:
    """Deterministic for a fixed (architecture, mode, counts, seed).

    Layers holding fewer nodes than per_layer_count contribute all of them.
    """
    if mode not in MODES:
        raise ConfigError(f"unknown tap mode {mode!r} (known: {MODES})")
    if mode == "1d":
        _softmax_layer(net)
        return TapSet(mode="1d", entries=())
    if mode == "output":
        sm = _softmax_layer(net)
        return TapSet(mode="output", entries=tuple((sm, j) for j in range(net.class_count)))

    if per_layer_count is None or last_n_layers is None:
        raise ConfigError("multilayer mode needs per_layer_count and last_n_layers")
    if per_layer_count < 1:
        raise ConfigError("per_layer_count must be >= 1")
    if not 1 <= last_n_layers <= len(net.layers):
        raise ConfigError(
            f"last_n_layers={last_n_layers} out of range for a {len(net.layers)}-layer network"
        )
    seed = 0 if seed is None else int(seed)
    rng = np.random.default_rng(seed)
    entries = []
    for layer_id in range(len(net.layers) - last_n_layers, len(net.layers)):
        size = net.layer_size(layer_id)
        if size <= per_layer_count:
            chosen = np.arange(size)
        else:
            chosen = np.sort(rng.choice(size, size=per_layer_count, replace=False))
        entries.extend((layer_id, int(node)) for node in chosen)
    return TapSet(mode="multilayer", entries=tuple(entries), seed=seed,
                  per_layer_count=per_layer_count, last_n_layers=last_n_layers)


class TapGather:
    """Precomputed index arrays to pull tap values out of a forward trace."""

    def __init__(self, net: Network, entries):
        self.layer_ids = sorted({layer for layer, _ in entries})
        for layer, node in entries:
            if not 0 <= node < net.layer_size(layer):
                raise ConfigError(f"tap node {node} out of range for layer {layer}")
        self._per_layer = {}
        for li in self.layer_ids:
            cols = [i for i, (layer, _) in enumerate(entries) if layer == li]
            nodes = np.array([entries[i][1] for i in cols], dtype=np.int64)
            self._per_layer[li] = (np.array(cols, dtype=np.int64), nodes)
        self.dimension = len(entries)

    def values(self, trace: dict[int, np.ndarray], n: int) -> np.ndarray:
        out = np.empty((n, self.dimension), dtype=np.float32)
        for li, (cols, nodes) in self._per_layer.items():
            flat = trace[li].reshape(n, -1)
            out[:, cols] = flat[:, nodes]
        return out
