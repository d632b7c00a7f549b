"""Benchmark harness: wall time, forward-pass counts, and attribution-memory
accounting per (segmentation, mode) cell, plus the time-vs-AUC scatter data."""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass, field

import numpy as np

from segiqr.attribution.features import extract_features
from segiqr.data.atomic import atomic_write_bytes
from segiqr.errors import ConfigError
from segiqr.nn.network import Network
from segiqr.specs import ModeSpec, SegSpec

BENCH_COLUMNS = ["segmentation", "mode", "images", "batch_size", "reps", "workers",
                 "wall_time_per_batch_s", "forward_passes", "attribution_bytes", "auc"]


def accounting(shapes) -> int:
    """Bytes needed to retain all attribution matrices: sum of k*d*4 over
    images, k occlusions and d taps each, 4 bytes per float32 value."""
    return sum(int(k) * int(d) * 4 for k, d in shapes)


@dataclass
class BenchRecord:
    segmentation: str
    mode: str
    images: int
    batch_size: int
    reps: int
    workers: int
    wall_time_per_batch_s: float     # median over reps, normalized to one batch
    forward_passes: int              # sum of k_i + 1 over the image set, one rep
    attribution_bytes: int           # sum of k_i * d * 4 over the image set
    auc: float | None = None


def run_cell(net: Network, images: np.ndarray, seg: SegSpec, mode: ModeSpec,
             reps: int = 3, batch_size: int = 128, workers: int = 1,
             warmup: bool = True) -> BenchRecord:
    """Times feature extraction for one grid cell.

    Segmentation is computed once (it is part of the pipeline cost and is
    included in the timed section by re-running it each rep, matching how
    the extraction stage behaves end to end).
    """
    if reps < 1:
        raise ConfigError("reps must be >= 1")
    n = len(images)
    taps = mode.taps(net)
    hwc = images.transpose(0, 2, 3, 1)

    def one_run():
        maps = [seg.segment(hwc[i]) for i in range(n)]
        vectors = extract_features(net, images, maps, taps, workers=workers)
        return maps, vectors

    if warmup:
        warm_n = min(n, batch_size)
        warm_maps = [seg.segment(hwc[i]) for i in range(warm_n)]
        extract_features(net, images[:warm_n], warm_maps, taps, workers=workers)

    times = []
    maps = None
    for _ in range(reps):
        net.pass_counter.reset()
        t0 = time.perf_counter()
        maps, _ = one_run()
        times.append(time.perf_counter() - t0)
    forward_passes = net.pass_counter.value
    seg_counts = [m.segment_count for m in maps]
    batches = max(1, int(np.ceil(n / batch_size)))
    return BenchRecord(
        segmentation=seg.label,
        mode=mode.label,
        images=n,
        batch_size=batch_size,
        reps=reps,
        workers=workers,
        wall_time_per_batch_s=float(np.median(times)) / batches,
        forward_passes=forward_passes,
        attribution_bytes=accounting((k, taps.dimension if taps.mode != "1d" else 1)
                                     for k in seg_counts),
        auc=None,
    )


def write_bench_csv(path, records: list[BenchRecord]):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(BENCH_COLUMNS)
    for r in records:
        writer.writerow([r.segmentation, r.mode, r.images, r.batch_size, r.reps,
                         r.workers, repr(r.wall_time_per_batch_s), r.forward_passes,
                         r.attribution_bytes,
                         "" if r.auc is None else repr(float(r.auc))])
    atomic_write_bytes(path, buf.getvalue().encode("utf-8"))


def write_scatter_csv(path, records: list[BenchRecord]):
    """Time-vs-detection-accuracy trade-off points, one per cell with an AUC."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["auc", "time_s", "family", "segmentation", "mode"])
    for r in records:
        if r.auc is None:
            continue
        family = r.segmentation.split(":")[0]
        writer.writerow([repr(float(r.auc)), repr(r.wall_time_per_batch_s),
                         family, r.segmentation, r.mode])
    atomic_write_bytes(path, buf.getvalue().encode("utf-8"))
