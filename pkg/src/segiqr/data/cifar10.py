"""CIFAR-10 binary ingestion, bit-exact.

Each record is 3073 bytes: one label byte (0-9) then 3072 pixel bytes,
1024 red + 1024 green + 1024 blue, row-major. Pixels normalize to [0,1]
as byte/255; round(value*255) recovers the original bytes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from segiqr.data.atomic import atomic_write_bytes
from segiqr.errors import DataError, FormatError

RECORD_BYTES = 3073
IMAGE_SHAPE = (3, 32, 32)
TRAIN_FILES = [f"data_batch_{i}.bin" for i in range(1, 6)]
TEST_FILE = "test_batch.bin"
CLASS_COUNT = 10


@dataclass
class ImageBatch:
    images: np.ndarray                 # (n, 3, 32, 32) float32 in [0, 1]
    labels: np.ndarray                 # (n,) int64
    source_ids: list[str] = field(default_factory=list)

    def __post_init__(self):
        if not self.source_ids:
            self.source_ids = [str(i) for i in range(len(self.labels))]

    def __len__(self):
        return len(self.labels)


def parse_records(data: bytes, source: str = "<bytes>"):
    """Raw record block -> (labels uint8, pixels uint8 (n, 3072))."""
    if len(data) % RECORD_BYTES != 0:
        full = len(data) // RECORD_BYTES
        raise FormatError(
            f"{source}: size {len(data)} is not a multiple of {RECORD_BYTES}; "
            f"record {full} is truncated at offset {full * RECORD_BYTES}"
        )
    arr = np.frombuffer(data, dtype=np.uint8).reshape(-1, RECORD_BYTES)
    labels = arr[:, 0]
    if labels.size and labels.max() > 9:
        bad = int(np.argmax(labels > 9))
        raise FormatError(
            f"{source}: record {bad} has label {labels[bad]} > 9 "
            f"(offset {bad * RECORD_BYTES})"
        )
    return labels.copy(), arr[:, 1:].copy()


def pixels_to_images(pixels: np.ndarray) -> np.ndarray:
    """uint8 (n, 3072) -> float32 (n, 3, 32, 32), exactly byte/255."""
    return (pixels.reshape(-1, *IMAGE_SHAPE).astype(np.float32)) / np.float32(255.0)


def images_to_pixels(images: np.ndarray) -> np.ndarray:
    """float32 [0,1] -> uint8 bytes via round(value*255)."""
    scaled = np.rint(np.clip(np.asarray(images, dtype=np.float64), 0.0, 1.0) * 255.0)
    return scaled.astype(np.uint8).reshape(len(images), -1)


def records_to_bytes(labels: np.ndarray, pixels: np.ndarray) -> bytes:
    n = len(labels)
    out = np.empty((n, RECORD_BYTES), dtype=np.uint8)
    out[:, 0] = labels
    out[:, 1:] = pixels
    return out.tobytes()


def read_batch_file(path: str | Path) -> ImageBatch:
    path = Path(path)
    labels, pixels = parse_records(path.read_bytes(), str(path))
    ids = [f"{path.name}[{i}]" for i in range(len(labels))]
    return ImageBatch(images=pixels_to_images(pixels), labels=labels.astype(np.int64),
                      source_ids=ids)


def write_batch_file(path: str | Path, images: np.ndarray, labels: np.ndarray):
    atomic_write_bytes(Path(path), records_to_bytes(
        np.asarray(labels, dtype=np.uint8), images_to_pixels(images)))


def load_cifar10(directory: str | Path) -> tuple[ImageBatch, ImageBatch]:
    """Standard binary layout: five train files plus one test file."""
    directory = Path(directory)
    missing = [n for n in TRAIN_FILES + [TEST_FILE] if not (directory / n).exists()]
    if missing:
        raise DataError(f"{directory}: missing dataset files {missing}")
    parts = [read_batch_file(directory / n) for n in TRAIN_FILES]
    train = ImageBatch(
        images=np.concatenate([p.images for p in parts]),
        labels=np.concatenate([p.labels for p in parts]),
        source_ids=[sid for p in parts for sid in p.source_ids],
    )
    test = read_batch_file(directory / TEST_FILE)
    return train, test
