"""Localized k-means over (L, a, b, y, x) with a compactness-weighted
spatial term and 4-connectivity enforcement."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from segiqr.errors import ConfigError
from segiqr.segmentation.color import rgb_to_lab
from segiqr.segmentation.label_map import (
    LabelMap,
    check_image,
    connected_components,
    relabel_contiguous,
)


@dataclass
class SlicParams:
    n_segments: int = 64
    compactness: float = 10.0
    max_iter: int = 10
    enforce_connectivity: bool = True

    def validate(self):
        if self.n_segments < 1:
            raise ConfigError("slic n_segments must be >= 1")
        if self.compactness <= 0:
            raise ConfigError("slic compactness must be > 0")
        if self.max_iter < 1:
            raise ConfigError("slic max_iter must be >= 1")
        return self


def _seed_grid(h: int, w: int, k: int) -> np.ndarray:
    """At most k seed centers on an aspect-proportional grid.

    Centers sit at block centroids (half-integer coordinates), which keeps
    assignment tie-free on integer pixel grids.
    """
    ny = max(1, int(np.floor(np.sqrt(k * h / w))))
    nx = max(1, int(np.floor(k / ny)))
    while ny * nx > k:
        nx -= 1
    ys = (np.arange(ny) + 0.5) * h / ny - 0.5
    xs = (np.arange(nx) + 0.5) * w / nx - 0.5
    return np.array([(y, x) for y in ys for x in xs], dtype=np.float64)


def slic(image: np.ndarray, params: SlicParams) -> LabelMap:
    image = check_image(image)
    params.validate()
    h, w = image.shape[:2]
    n = h * w
    k = params.n_segments
    if k > n:
        raise ConfigError(f"slic n_segments={k} exceeds the pixel count {n}")

    lab = rgb_to_lab(image).astype(np.float64)
    s = np.sqrt(n / k)
    ratio2 = (params.compactness / s) ** 2  # weight of the squared spatial term

    seeds = _seed_grid(h, w, k)
    centers = np.empty((len(seeds), 5), dtype=np.float64)  # l, a, b, y, x
    for i, (cy, cx) in enumerate(seeds):
        yi = min(h - 1, int(cy + 0.5))
        xi = min(w - 1, int(cx + 0.5))
        centers[i, :3] = lab[yi, xi]
        centers[i, 3:] = (cy, cx)

    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    window = int(np.ceil(2 * s))
    labels = np.zeros((h, w), dtype=np.int32)
    for _ in range(params.max_iter):
        best = np.full((h, w), np.inf)
        labels.fill(-1)
        for ci in range(len(centers)):
            cl, ca, cb, cy, cx = centers[ci]
            y0, y1 = max(0, int(cy) - window), min(h, int(cy) + window + 1)
            x0, x1 = max(0, int(cx) - window), min(w, int(cx) + window + 1)
            if y0 >= y1 or x0 >= x1:
                continue
            patch = lab[y0:y1, x0:x1]
            d_lab = ((patch[..., 0] - cl) ** 2 + (patch[..., 1] - ca) ** 2
                     + (patch[..., 2] - cb) ** 2)
            d_xy = (yy[y0:y1, x0:x1] - cy) ** 2 + (xx[y0:y1, x0:x1] - cx) ** 2
            d = d_lab + d_xy * ratio2
            closer = d < best[y0:y1, x0:x1]
            best[y0:y1, x0:x1][closer] = d[closer]
            labels[y0:y1, x0:x1][closer] = ci
        if (labels < 0).any():
            _assign_orphans(labels, best, lab, yy, xx, centers, ratio2)
        # recompute centers as the mean feature of their pixels
        flat = labels.ravel()
        counts = np.bincount(flat, minlength=len(centers)).astype(np.float64)
        nonempty = counts > 0
        for dim, values in enumerate((lab[..., 0], lab[..., 1], lab[..., 2], yy, xx)):
            sums = np.bincount(flat, weights=values.ravel(), minlength=len(centers))
            centers[nonempty, dim] = sums[nonempty] / counts[nonempty]

    if params.enforce_connectivity:
        labels = _enforce_connectivity(labels)
    return relabel_contiguous(labels)


def _assign_orphans(labels, best, lab, yy, xx, centers, ratio2):
    """Pixels outside every search window fall back to a global assignment."""
    mask = labels < 0
    pix = np.concatenate([lab[mask], yy[mask][:, None], xx[mask][:, None]], axis=1)
    d_lab = ((pix[:, None, :3] - centers[None, :, :3]) ** 2).sum(axis=2)
    d_xy = ((pix[:, None, 3:] - centers[None, :, 3:]) ** 2).sum(axis=2)
    d = d_lab + d_xy * ratio2
    labels[mask] = d.argmin(axis=1)
    best[mask] = d.min(axis=1)


def _enforce_connectivity(labels: np.ndarray) -> np.ndarray:
    """Keep each label's largest 4-connected component; every other component
    merges into its largest adjacent component (smallest label on ties)."""
    comp, comp_count = connected_components(labels)
    sizes = np.bincount(comp.ravel(), minlength=comp_count)
    h, w = labels.shape
    flat_comp = comp.ravel()
    keeper = {}
    for c in range(comp_count):
        lbl = labels.ravel()[np.argmax(flat_comp == c)]
        if lbl not in keeper or sizes[c] > sizes[keeper[lbl]]:
            keeper[lbl] = c
    keepers = set(keeper.values())

    merged = comp.copy()
    order = [c for c in range(comp_count) if c not in keepers]
    order.sort(key=lambda c: (sizes[c], c))
    for c in order:
        mask = merged == c
        neigh = _adjacent_components(merged, mask)
        if not neigh:
            continue
        neigh_sizes = np.bincount(merged.ravel(), minlength=comp_count)
        target = max(neigh, key=lambda x: (neigh_sizes[x], -x))
        merged[mask] = target
    return merged


def _adjacent_components(comp: np.ndarray, mask: np.ndarray) -> list[int]:
    h, w = comp.shape
    out = set()
    ys, xs = np.nonzero(mask)
    for dy, dx in ((-1, 0), (1, 0), (0, -1), (0, 1)):
        ny, nx = ys + dy, xs + dx
        ok = (ny >= 0) & (ny < h) & (nx >= 0) & (nx < w)
        vals = comp[ny[ok], nx[ok]]
        out.update(int(v) for v in np.unique(vals))
    out.discard(int(comp[ys[0], xs[0]]))
    return sorted(out)
