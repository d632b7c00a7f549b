"""IQR feature vectors: the occlusion sweep reduced to one dispersion value
per tapped node, plus the CSV container the detector trains from."""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from segiqr.attribution.loo import _loo_multi
from segiqr.attribution.stats import column_iqr
from segiqr.attribution.taps import TapSet
from segiqr.data.atomic import atomic_write_bytes, atomic_write_text
from segiqr.errors import ConfigError, FormatError
from segiqr.nn.network import Network
from segiqr.segmentation.label_map import LabelMap


@dataclass
class IqrVector:
    image_id: str
    values: np.ndarray  # (d,) non-negative float32
    provenance: dict = field(default_factory=dict)

    @property
    def dimension(self) -> int:
        return len(self.values)


def extract_features(net: Network, images: np.ndarray, maps: list[LabelMap],
                     taps: TapSet, image_ids=None, provenance: dict | None = None,
                     retain_matrices: bool = False, workers: int = 1):
    """One IqrVector per image; k+1 forward passes per image with k segments.

    Images are processed independently (occlusions of one image are grouped
    into shared forward batches), so a multi-image call returns exactly what
    per-image calls would. With retain_matrices the raw attribution matrices
    are returned as a second list for memory accounting experiments.
    """
    by_set = extract_features_multi(net, images, maps, [taps], image_ids=image_ids,
                                    provenance=provenance, retain_matrices=retain_matrices,
                                    workers=workers)
    return by_set[0]


def extract_features_multi(net: Network, images: np.ndarray, maps: list[LabelMap],
                           tap_sets: list[TapSet], image_ids=None,
                           provenance: dict | None = None,
                           retain_matrices: bool = False, workers: int = 1):
    """Shares each image's occlusion sweep across several tap sets.

    Forward passes are identical whatever is tapped, so per-set results are
    bit-identical to dedicated extract_features() runs.
    """
    images = np.asarray(images, dtype=np.float32)
    if images.ndim != 4:
        raise ConfigError(f"expected an NxCxHxW batch, got shape {images.shape}")
    if len(maps) != len(images):
        raise ConfigError(f"{len(images)} images but {len(maps)} label maps")
    if image_ids is None:
        image_ids = [str(i) for i in range(len(images))]
    base = dict(provenance or {})

    def one(i: int):
        mats = _loo_multi(net, images[i], maps[i], tap_sets, image_id=image_ids[i])
        vectors = []
        for taps, mat in zip(tap_sets, mats):
            prov = dict(base)
            prov["taps"] = taps.describe()
            vectors.append(IqrVector(image_id=image_ids[i],
                                     values=column_iqr(mat.values),
                                     provenance=prov))
        return vectors, (mats if retain_matrices else None)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            done = list(pool.map(one, range(len(images))))
    else:
        done = [one(i) for i in range(len(images))]

    out = []
    for s in range(len(tap_sets)):
        vectors = [d[0][s] for d in done]
        if retain_matrices:
            out.append((vectors, [d[1][s] for d in done]))
        else:
            out.append(vectors)
    return out


# -- feature CSV + provenance sidecar ----------------------------------

@dataclass
class FeatureRecord:
    """One labeled row of the detector's training table."""

    image_id: str
    source: str
    attack: str
    epsilon: float
    label: str  # "benign" | "adversarial"
    features: np.ndarray

    def __post_init__(self):
        if self.label not in ("benign", "adversarial"):
            raise ConfigError(f"label must be benign or adversarial, got {self.label!r}")


def feature_header(dimension: int) -> list[str]:
    return ["image_id", "source", "attack", "epsilon", "label"] + [f"f{i}" for i in range(dimension)]


def write_feature_csv(path: str | Path, records: list[FeatureRecord],
                      provenance: dict | None = None):
    if not records:
        raise ConfigError("refusing to write an empty feature file")
    d = len(records[0].features)
    for r in records:
        if len(r.features) != d:
            raise ConfigError("feature records disagree on dimension")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(feature_header(d))
    for r in records:
        writer.writerow([r.image_id, r.source, r.attack, repr(float(r.epsilon)), r.label]
                        + [repr(float(v)) for v in r.features])
    atomic_write_bytes(Path(path), buf.getvalue().encode("utf-8"))
    if provenance is not None:
        write_provenance_sidecar(path, provenance)


def read_feature_csv(path: str | Path) -> list[FeatureRecord]:
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as f:
        rows = list(csv.reader(f))
    if not rows:
        raise FormatError(f"{path}: empty feature file")
    header = rows[0]
    if header[:5] != ["image_id", "source", "attack", "epsilon", "label"]:
        raise FormatError(f"{path}: unexpected header {header[:5]}")
    d = len(header) - 5
    if [f"f{i}" for i in range(d)] != header[5:]:
        raise FormatError(f"{path}: malformed feature columns")
    records = []
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise FormatError(f"{path}: line {i} has {len(row)} fields, expected {len(header)}")
        records.append(FeatureRecord(
            image_id=row[0], source=row[1], attack=row[2],
            epsilon=float(row[3]), label=row[4],
            features=np.array([float(v) for v in row[5:]], dtype=np.float32),
        ))
    return records


def provenance_sidecar_path(path: str | Path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".provenance.json")


def write_provenance_sidecar(path: str | Path, provenance: dict):
    atomic_write_text(provenance_sidecar_path(path), json.dumps(provenance, indent=2, sort_keys=True))


def read_provenance_sidecar(path: str | Path) -> dict:
    return json.loads(provenance_sidecar_path(path).read_text(encoding="utf-8"))
