"""Mode-seeking segmentation: link each pixel to its nearest higher-density
neighbor in joint (color, x, y) space; segments are the trees of that forest.

Color is CIELAB scaled by `ratio`, densities come from a Gaussian Parzen
estimate with bandwidth `kernel_size` over a 3-sigma window. A link is only
allowed within `max_dist` (full joint-space distance); pixels with no
admissible parent are roots.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from segiqr.errors import ConfigError
from segiqr.segmentation.color import gaussian_smooth, rgb_to_lab
from segiqr.segmentation.label_map import LabelMap, check_image, relabel_contiguous


@dataclass
class QuickshiftParams:
    sigma: float = 0.0          # Gaussian pre-smoothing of the image
    max_dist: float = 10.0
    kernel_size: float = 5.0
    ratio: float = 1.0

    def validate(self):
        if self.max_dist <= 0:
            raise ConfigError("quickshift max_dist must be > 0")
        if self.kernel_size <= 0:
            raise ConfigError("quickshift kernel_size must be > 0")
        if self.sigma < 0:
            raise ConfigError("quickshift sigma must be >= 0")
        if self.ratio <= 0:
            raise ConfigError("quickshift ratio must be > 0")
        return self


def _features(image: np.ndarray, params: QuickshiftParams) -> np.ndarray:
    smoothed = gaussian_smooth(image, params.sigma)
    return rgb_to_lab(smoothed).astype(np.float64) * params.ratio


def quickshift(image: np.ndarray, params: QuickshiftParams) -> LabelMap:
    image = check_image(image)
    params.validate()
    h, w = image.shape[:2]
    color = _features(image, params)

    density = _density(color, params.kernel_size)
    parent = _link(color, density, params.max_dist)

    # forest -> root labels
    flat = parent.ravel().copy()
    while True:
        nxt = flat[flat]
        if np.array_equal(nxt, flat):
            break
        flat = nxt
    return relabel_contiguous(flat.reshape(h, w))


def _offsets(radius: int, h: int, w: int):
    for dy in range(-min(radius, h - 1), min(radius, h - 1) + 1):
        for dx in range(-min(radius, w - 1), min(radius, w - 1) + 1):
            if dy == 0 and dx == 0:
                continue
            yield dy, dx


def _shifted_views(arr: np.ndarray, dy: int, dx: int):
    """Aligned views: (pixels p, their neighbors q at offset (dy, dx))."""
    h, w = arr.shape[:2]
    ys = slice(max(0, -dy), min(h, h - dy))
    xs = slice(max(0, -dx), min(w, w - dx))
    ysq = slice(max(0, dy), min(h, h + dy))
    xsq = slice(max(0, dx), min(w, w + dx))
    return arr[ys, xs], arr[ysq, xsq], (ys, xs)


def _density(color: np.ndarray, kernel_size: float) -> np.ndarray:
    h, w = color.shape[:2]
    radius = int(np.ceil(3.0 * kernel_size))
    inv = 1.0 / (2.0 * kernel_size * kernel_size)
    density = np.ones((h, w), dtype=np.float64)  # own contribution, exp(0)
    for dy, dx in _offsets(radius, h, w):
        if dy * dy + dx * dx > radius * radius:
            continue
        cp, cq, (ys, xs) = _shifted_views(color, dy, dx)
        d2 = ((cp - cq) ** 2).sum(axis=2) + (dy * dy + dx * dx)
        density[ys, xs] += np.exp(-d2 * inv)
    return density


def _link(color: np.ndarray, density: np.ndarray, max_dist: float) -> np.ndarray:
    """Each pixel's parent: the strictly-denser neighbor at minimal joint
    distance <= max_dist; distance ties break toward the lowest pixel index."""
    h, w = color.shape[:2]
    radius = int(np.floor(max_dist))
    idx = np.arange(h * w, dtype=np.int64).reshape(h, w)
    best_d = np.full((h, w), np.inf)
    parent = idx.copy()
    max_d2 = max_dist * max_dist
    for dy, dx in _offsets(radius, h, w):
        sp2 = dy * dy + dx * dx
        if sp2 > max_d2:
            continue
        cp, cq, (ys, xs) = _shifted_views(color, dy, dx)
        dp, dq, _ = _shifted_views(density, dy, dx)
        _, cand, _ = _shifted_views(idx, dy, dx)
        d2 = ((cp - cq) ** 2).sum(axis=2) + sp2
        cur_d = best_d[ys, xs]
        cur_p = parent[ys, xs]
        ok = (dq > dp) & (d2 <= max_d2)
        better = ok & ((d2 < cur_d) | ((d2 == cur_d) & (cand < cur_p)))
        best_d[ys, xs] = np.where(better, d2, cur_d)
        parent[ys, xs] = np.where(better, cand, cur_p)
    return parent
