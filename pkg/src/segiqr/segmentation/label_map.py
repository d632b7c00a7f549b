"""Per-pixel segment label maps and their on-disk container."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from segiqr.data.atomic import atomic_write_bytes
from segiqr.errors import ConfigError, FormatError, TruncatedError

MAGIC = b"SEGL"
VERSION = 1


@dataclass
class LabelMap:
    """A partition of an HxW image into segments labeled 0..k-1."""

    labels: np.ndarray  # (H, W) int32
    segment_count: int

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    def validate(self):
        if self.labels.ndim != 2 or self.labels.size == 0:
            raise ConfigError(f"label map must be a non-empty 2-D grid, got shape {self.labels.shape}")
        present = np.unique(self.labels)
        if present[0] != 0 or present[-1] != self.segment_count - 1 or len(present) != self.segment_count:
            raise ConfigError(
                f"labels must cover exactly 0..{self.segment_count - 1}, found {len(present)} distinct values"
            )
        return self

    def pixel_counts(self) -> np.ndarray:
        return np.bincount(self.labels.ravel(), minlength=self.segment_count)


def check_image(image: np.ndarray) -> np.ndarray:
    """Segmentation inputs are HxWx3 float arrays with values in [0, 1]."""
    image = np.asarray(image, dtype=np.float32)
    if image.ndim != 3 or image.shape[2] != 3 or image.shape[0] < 1 or image.shape[1] < 1:
        raise ConfigError(f"expected an HxWx3 image with at least one pixel, got shape {image.shape}")
    if not np.isfinite(image).all():
        raise ConfigError("image contains non-finite values")
    if image.min() < -1e-6 or image.max() > 1 + 1e-6:
        raise ConfigError(f"image values must lie in [0,1], found range [{image.min()}, {image.max()}]")
    return image


def per_pixel(image: np.ndarray) -> LabelMap:
    """The degenerate segmentation: one segment per pixel, row-major ids."""
    image = check_image(image)
    h, w = image.shape[:2]
    return LabelMap(labels=np.arange(h * w, dtype=np.int32).reshape(h, w), segment_count=h * w)


def relabel_contiguous(labels: np.ndarray) -> LabelMap:
    """Remaps arbitrary labels onto 0..k-1, preserving the partition.

    Distinct input labels stay distinct; ids are assigned in ascending order
    of the original label values, so the result is deterministic.
    """
    labels = np.asarray(labels)
    if labels.ndim != 2 or labels.size == 0:
        raise ConfigError(f"label map must be a non-empty 2-D grid, got shape {labels.shape}")
    uniq, inverse = np.unique(labels, return_inverse=True)
    return LabelMap(labels=inverse.reshape(labels.shape).astype(np.int32), segment_count=len(uniq))


def connected_components(labels: np.ndarray):
    """4-connected components of a label map.

    Returns (component_ids, component_count) where pixels share a component
    id iff they are 4-connected within one label.
    """
    h, w = labels.shape
    n = h * w
    parent = np.arange(n, dtype=np.int64)

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    flat = labels.ravel()
    idx = np.arange(n).reshape(h, w)
    pairs = []
    same_h = labels[:, :-1] == labels[:, 1:]
    pairs.append(np.stack([idx[:, :-1][same_h], idx[:, 1:][same_h]], axis=1))
    same_v = labels[:-1, :] == labels[1:, :]
    pairs.append(np.stack([idx[:-1, :][same_v], idx[1:, :][same_v]], axis=1))
    for a, b in np.concatenate(pairs):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    roots = parent.copy()
    while True:
        nxt = parent[roots]
        if np.array_equal(nxt, roots):
            break
        roots = nxt
    _, comp = np.unique(roots, return_inverse=True)
    del flat
    return comp.reshape(h, w).astype(np.int32), int(comp.max()) + 1


def write_label_maps(path: str | Path, maps: list[LabelMap]):
    """Binary container: magic, version, count, then per image the extents,
    segment count, and row-major u32 labels. Little-endian throughout."""
    chunks = [MAGIC, struct.pack("<II", VERSION, len(maps))]
    for m in maps:
        chunks.append(struct.pack("<HHI", m.height, m.width, m.segment_count))
        chunks.append(np.ascontiguousarray(m.labels, dtype="<u4").tobytes())
    atomic_write_bytes(Path(path), b"".join(chunks))


def read_label_maps(path: str | Path) -> list[LabelMap]:
    path = Path(path)
    data = path.read_bytes()
    pos = 0

    def take(n):
        nonlocal pos
        if pos + n > len(data):
            raise TruncatedError(f"{path}: needed {n} bytes at offset {pos}, file has {len(data)}")
        out = data[pos:pos + n]
        pos += n
        return out

    if take(4) != MAGIC:
        raise FormatError(f"{path}: bad magic, not a label-map file")
    version, count = struct.unpack("<II", take(8))
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    maps = []
    for _ in range(count):
        h, w, k = struct.unpack("<HHI", take(8))
        labels = np.frombuffer(take(h * w * 4), dtype="<u4").reshape(h, w).astype(np.int32)
        maps.append(LabelMap(labels=labels, segment_count=k).validate())
    if pos != len(data):
        raise FormatError(f"{path}: {len(data) - pos} trailing bytes after last map")
    return maps
