"""Greedy graph-merge segmentation over an 8-connected pixel grid.

Edges carry the Euclidean RGB distance of their endpoints after Gaussian
pre-smoothing. Components merge while the connecting edge weight stays
below both components' adaptive threshold (max internal edge + scale/size),
then anything smaller than min_size is folded into a neighbor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from segiqr.errors import ConfigError
from segiqr.segmentation.color import gaussian_smooth
from segiqr.segmentation.label_map import LabelMap, check_image, relabel_contiguous


@dataclass
class FelzParams:
    scale: float = 100.0
    sigma: float = 0.8
    min_size: int = 20

    def validate(self):
        if self.scale <= 0:
            raise ConfigError("felzenszwalb scale must be > 0")
        if self.sigma < 0:
            raise ConfigError("felzenszwalb sigma must be >= 0")
        if self.min_size < 1:
            raise ConfigError("felzenszwalb min_size must be >= 1")
        return self


def grid_edges(h: int, w: int):
    """8-connected grid edges in a fixed order: right, down, down-right,
    down-left. The position in this list is the tie-breaking edge index."""
    idx = np.arange(h * w, dtype=np.int64).reshape(h, w)
    groups = [
        (idx[:, :-1], idx[:, 1:]),
        (idx[:-1, :], idx[1:, :]),
        (idx[:-1, :-1], idx[1:, 1:]),
        (idx[:-1, 1:], idx[1:, :-1]),
    ]
    a = np.concatenate([g[0].ravel() for g in groups])
    b = np.concatenate([g[1].ravel() for g in groups])
    return a, b


class _UnionFind:
    def __init__(self, n: int):
        self.parent = np.arange(n, dtype=np.int64)
        self.size = np.ones(n, dtype=np.int64)

    def find(self, i: int) -> int:
        parent = self.parent
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def union(self, a: int, b: int) -> int:
        if self.size[a] < self.size[b]:
            a, b = b, a
        self.parent[b] = a
        self.size[a] += self.size[b]
        return a


def felzenszwalb(image: np.ndarray, params: FelzParams) -> LabelMap:
    image = check_image(image)
    params.validate()
    h, w = image.shape[:2]
    smoothed = gaussian_smooth(image, params.sigma).astype(np.float64)
    ea, eb = grid_edges(h, w)
    flat = smoothed.reshape(-1, 3)
    weights = np.sqrt(((flat[ea] - flat[eb]) ** 2).sum(axis=1))
    # stable sort keeps ascending edge index within equal weights
    order = np.argsort(weights, kind="stable")

    uf = _UnionFind(h * w)
    # adaptive threshold per component: max internal edge + scale / |component|
    threshold = np.full(h * w, params.scale, dtype=np.float64)
    for e in order:
        ra, rb = uf.find(ea[e]), uf.find(eb[e])
        if ra == rb:
            continue
        wgt = weights[e]
        if wgt <= threshold[ra] and wgt <= threshold[rb]:
            root = uf.union(ra, rb)
            threshold[root] = wgt + params.scale / uf.size[root]

    # fold undersized components into a neighbor, in the same edge order
    for e in order:
        ra, rb = uf.find(ea[e]), uf.find(eb[e])
        if ra != rb and (uf.size[ra] < params.min_size or uf.size[rb] < params.min_size):
            uf.union(ra, rb)

    roots = uf.parent.copy()
    while True:
        nxt = uf.parent[roots]
        if np.array_equal(nxt, roots):
            break
        roots = nxt
    return relabel_contiguous(roots.reshape(h, w))
