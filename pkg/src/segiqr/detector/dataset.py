"""The detector's training table: IQR vectors with benign/adversarial labels."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from segiqr.attribution.features import FeatureRecord
from segiqr.errors import ConfigError

LABEL_NAMES = ("benign", "adversarial")


@dataclass
class FeatureDataset:
    features: np.ndarray          # (n, d) float32
    labels: np.ndarray            # (n,) int64, 0 benign / 1 adversarial
    ids: list[str] = field(default_factory=list)
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float32)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2 or len(self.features) != len(self.labels):
            raise ConfigError("features and labels disagree on row count")
        if not self.ids:
            self.ids = [str(i) for i in range(len(self.labels))]

    def __len__(self):
        return len(self.labels)

    @property
    def dimension(self) -> int:
        return self.features.shape[1]

    def subset(self, index: np.ndarray) -> "FeatureDataset":
        return FeatureDataset(self.features[index], self.labels[index],
                              [self.ids[i] for i in index], dict(self.provenance))

    @classmethod
    def from_records(cls, records: list[FeatureRecord], provenance: dict | None = None):
        if not records:
            raise ConfigError("no feature records given")
        feats = np.stack([r.features for r in records])
        labels = np.array([LABEL_NAMES.index(r.label) for r in records], dtype=np.int64)
        ids = [r.image_id for r in records]
        return cls(feats, labels, ids, dict(provenance or {}))


def split_train_test(ds: FeatureDataset, train_fraction: float = 0.8,
                     seed: int = 0) -> tuple[FeatureDataset, FeatureDataset]:
    """Stratified, disjoint, and reproducible from the seed."""
    if not 0.0 < train_fraction < 1.0:
        raise ConfigError("train_fraction must lie strictly between 0 and 1")
    rng = np.random.default_rng(seed)
    train_idx, test_idx = [], []
    for cls in (0, 1):
        members = np.flatnonzero(ds.labels == cls)
        if len(members) < 2:
            raise ConfigError(f"class {LABEL_NAMES[cls]} needs at least 2 rows, has {len(members)}")
        members = members[rng.permutation(len(members))]
        n_train = int(round(train_fraction * len(members)))
        n_train = min(max(n_train, 1), len(members) - 1)
        train_idx.append(members[:n_train])
        test_idx.append(members[n_train:])
    train_idx = np.sort(np.concatenate(train_idx))
    test_idx = np.sort(np.concatenate(test_idx))
    return ds.subset(train_idx), ds.subset(test_idx)
