"""Procedural 10-class image set in the CIFAR-10 binary layout.

Ten shape families (stripes, disks, frames, crosses, checkers, ...) drawn
with randomized colors, positions, and noise. Learnable by a small CNN yet
hard enough that gradient attacks have room to work. Every image is a pure
function of (seed, index), so datasets of any size are reproducible and a
prefix of a larger set equals the smaller set.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from segiqr.data.cifar10 import (
    TEST_FILE,
    TRAIN_FILES,
    ImageBatch,
    pixels_to_images,
    write_batch_file,
)

SIDE = 32
CLASS_NAMES = [
    "h-stripes", "v-stripes", "disk", "frame", "x-cross",
    "plus", "checker", "triangle", "split", "ring",
]

_YY, _XX = np.mgrid[0:SIDE, 0:SIDE]
_LABEL_STREAM = 1 << 40  # seed-stream id distinct from any image index


def _background(rng) -> np.ndarray:
    c1 = rng.uniform(0.05, 0.95, 3)
    c2 = rng.uniform(0.05, 0.95, 3)
    t = (_YY if rng.integers(2) else _XX) / (SIDE - 1)
    return c1[None, None, :] + (c2 - c1)[None, None, :] * t[..., None]


def _foreground_color(rng, bg_mean: np.ndarray) -> np.ndarray:
    color = rng.uniform(0.0, 1.0, 3)
    if np.linalg.norm(color - bg_mean) < 0.45:
        color = 1.0 - bg_mean
    return color


def _shape_mask(label: int, rng) -> np.ndarray:
    cy = 15.5 + rng.uniform(-3, 3)
    cx = 15.5 + rng.uniform(-3, 3)
    dy, dx = _YY - cy, _XX - cx
    if label == 0:
        period = int(rng.choice([4, 6, 8]))
        return ((_YY + rng.integers(period)) % period) < period // 2
    if label == 1:
        period = int(rng.choice([4, 6, 8]))
        return ((_XX + rng.integers(period)) % period) < period // 2
    if label == 2:
        r = rng.uniform(6, 10)
        return dy * dy + dx * dx <= r * r
    if label == 3:
        r = rng.uniform(8, 12)
        t = rng.uniform(2, 3.5)
        cheb = np.maximum(np.abs(dy), np.abs(dx))
        return (cheb <= r) & (cheb >= r - t)
    if label == 4:
        r = rng.uniform(9, 13)
        t = rng.uniform(1.5, 2.5)
        reach = np.maximum(np.abs(dy), np.abs(dx)) <= r
        return reach & ((np.abs(dy - dx) <= t) | (np.abs(dy + dx) <= t))
    if label == 5:
        r = rng.uniform(9, 13)
        t = rng.uniform(1.5, 3)
        return ((np.abs(dx) <= t) & (np.abs(dy) <= r)) | ((np.abs(dy) <= t) & (np.abs(dx) <= r))
    if label == 6:
        block = int(rng.choice([4, 8]))
        return ((_YY // block + _XX // block) % 2) == 0
    if label == 7:
        r = rng.uniform(8, 12)
        top = cy - r
        return (_YY >= top) & (_YY <= cy + r) & (np.abs(dx) <= (_YY - top) * 0.55)
    if label == 8:
        return _XX < cx
    if label == 9:
        r_out = rng.uniform(10, 13)
        r_in = rng.uniform(5, 7)
        d2 = dy * dy + dx * dx
        return (d2 <= r_out * r_out) & (d2 >= r_in * r_in)
    raise ValueError(f"label {label} out of range")


def synth_image_bytes(seed: int, index: int, label: int) -> np.ndarray:
    """One HxWx3 uint8 image; the byte grid is the canonical representation
    so in-memory data equals a file round-trip bit for bit."""
    rng = np.random.default_rng((seed, index))
    img = _background(rng)
    mask = _shape_mask(label, rng)
    img[mask] = _foreground_color(rng, img.mean(axis=(0, 1)))
    img += rng.normal(0.0, 0.05, img.shape)
    return np.rint(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)


def synth_dataset(n: int, seed: int = 0) -> ImageBatch:
    """n images with balanced shuffled labels, CxHxW float in [0,1]."""
    rng = np.random.default_rng((seed, _LABEL_STREAM))
    labels = np.arange(n, dtype=np.int64) % 10
    labels = labels[rng.permutation(n)]
    pixels = np.empty((n, 3 * SIDE * SIDE), dtype=np.uint8)
    for i in range(n):
        hwc = synth_image_bytes(seed, i, int(labels[i]))
        pixels[i] = hwc.transpose(2, 0, 1).reshape(-1)
    ids = [f"synth{seed}[{i}]" for i in range(n)]
    return ImageBatch(images=pixels_to_images(pixels), labels=labels, source_ids=ids)


def write_synthetic_cifar_dir(directory: str | Path, train_n: int = 640,
                              test_n: int = 512, train_seed: int = 101,
                              test_seed: int = 202):
    """Writes the synthetic set in the standard 5-train + 1-test layout."""
    directory = Path(directory)
    train = synth_dataset(train_n, seed=train_seed)
    test = synth_dataset(test_n, seed=test_seed)
    bounds = np.linspace(0, train_n, len(TRAIN_FILES) + 1).astype(int)
    for name, lo, hi in zip(TRAIN_FILES, bounds[:-1], bounds[1:]):
        write_batch_file(directory / name, train.images[lo:hi], train.labels[lo:hi])
    write_batch_file(directory / TEST_FILE, test.images, test.labels)
    return directory
