"""Detector evaluation and the JSON model container."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from segiqr.data.atomic import atomic_write_text
from segiqr.detector.dataset import FeatureDataset
from segiqr.detector.gbt import GbtHyper, GbtModel
from segiqr.detector.logistic import LogisticHyper, LogisticModel
from segiqr.detector.metrics import accuracy_at_half, auc
from segiqr.errors import ConfigError, FormatError


@dataclass
class EvalReport:
    auc: float
    accuracy: float
    benign_count: int
    adversarial_count: int
    provenance: dict = field(default_factory=dict)


def evaluate(model, test: FeatureDataset) -> EvalReport:
    if len(test) == 0:
        raise ConfigError("test set is empty")
    if test.dimension != model_dimension(model):
        raise ConfigError(
            f"model dimension {model_dimension(model)} does not match data dimension {test.dimension}"
        )
    if len(np.unique(test.labels)) < 2:
        raise ConfigError("test set must contain both classes")
    scores = model.scores(test.features)
    return EvalReport(
        auc=auc(scores, test.labels),
        accuracy=accuracy_at_half(scores, test.labels),
        benign_count=int((test.labels == 0).sum()),
        adversarial_count=int((test.labels == 1).sum()),
        provenance=dict(test.provenance),
    )


def model_dimension(model) -> int:
    if isinstance(model, LogisticModel):
        return len(model.weights)
    if isinstance(model, GbtModel):
        return model.dimension
    raise ConfigError(f"unknown model type {type(model).__name__}")


def save_model(model, path: str | Path, provenance: dict | None = None):
    if isinstance(model, LogisticModel):
        doc = {
            "kind": "logistic",
            "hyper": asdict(model.hyper),
            "weights": model.weights.tolist(),
            "bias": model.bias,
            "mean": model.mean.tolist(),
            "scale": model.scale.tolist(),
        }
    elif isinstance(model, GbtModel):
        doc = {
            "kind": "gbt",
            "hyper": asdict(model.hyper),
            "base_score": model.base_score,
            "dimension": model.dimension,
            "trees": model.trees,
        }
    else:
        raise ConfigError(f"unknown model type {type(model).__name__}")
    doc["provenance"] = dict(provenance or {})
    atomic_write_text(Path(path), json.dumps(doc))


def load_model(path: str | Path):
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise FormatError(f"{path}: not valid JSON: {e}") from e
    kind = doc.get("kind")
    if kind == "logistic":
        return LogisticModel(
            weights=np.array(doc["weights"], dtype=np.float64),
            bias=float(doc["bias"]),
            mean=np.array(doc["mean"], dtype=np.float64),
            scale=np.array(doc["scale"], dtype=np.float64),
            hyper=LogisticHyper(**doc["hyper"]),
        ), doc.get("provenance", {})
    if kind == "gbt":
        return GbtModel(
            base_score=float(doc["base_score"]),
            trees=doc["trees"],
            dimension=int(doc["dimension"]),
            hyper=GbtHyper(**doc["hyper"]),
        ), doc.get("provenance", {})
    raise FormatError(f"{path}: unknown model kind {kind!r}")
