"""Architecture config: a JSON text file listing layers in order.

Top-level keys: ``input_shape`` (C,H,W), ``class_count``, ``layers`` (ordered
list of layer objects with a ``kind`` and kind-specific parameters), plus an
optional ``name`` and ``parameter_count`` header used as a consistency check
against the built network.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from segiqr.errors import ConfigError

_LAYER_KEYS = {
    "conv2d": {"out_channels", "kernel", "stride", "padding", "in_channels"},
    "relu": set(),
    "maxpool2x2": set(),
    "flatten": set(),
    "dense": {"out_features", "in_features"},
    "batchnorm-inference": {"num_features"},
    "softmax": set(),
}
_REQUIRED_KEYS = {
    "conv2d": {"out_channels", "kernel"},
    "dense": {"out_features"},
    "batchnorm-inference": {"num_features"},
}


@dataclass
class ArchConfig:
    input_shape: tuple[int, int, int]
    class_count: int
    layers: list[dict] = field(default_factory=list)
    name: str = "unnamed"
    parameter_count: int | None = None

    def to_json(self) -> str:
        doc = {
            "name": self.name,
            "input_shape": list(self.input_shape),
            "class_count": self.class_count,
            "layers": self.layers,
        }
        if self.parameter_count is not None:
            doc["parameter_count"] = self.parameter_count
        return json.dumps(doc, indent=2)


def parse_arch_config(doc: dict) -> ArchConfig:
    if not isinstance(doc, dict):
        raise ConfigError("architecture config must be a JSON object")
    for key in ("input_shape", "class_count", "layers"):
        if key not in doc:
            raise ConfigError(f"architecture config missing required key {key!r}")
    shape = doc["input_shape"]
    if not (isinstance(shape, (list, tuple)) and len(shape) == 3 and all(int(v) > 0 for v in shape)):
        raise ConfigError(f"input_shape must be three positive extents (C,H,W), got {shape!r}")
    class_count = int(doc["class_count"])
    if class_count < 2:
        raise ConfigError("class_count must be >= 2")
    layers = doc["layers"]
    if not isinstance(layers, list) or not layers:
        raise ConfigError("layers must be a non-empty list")
    parsed = []
    for i, spec in enumerate(layers):
        if not isinstance(spec, dict) or "kind" not in spec:
            raise ConfigError(f"layer {i}: each layer needs a 'kind'")
        kind = spec["kind"]
        if kind not in _LAYER_KEYS:
            raise ConfigError(f"layer {i}: unknown kind {kind!r} (known: {sorted(_LAYER_KEYS)})")
        extra = set(spec) - _LAYER_KEYS[kind] - {"kind"}
        if extra:
            raise ConfigError(f"layer {i} ({kind}): unexpected keys {sorted(extra)}")
        missing = _REQUIRED_KEYS.get(kind, set()) - set(spec)
        if missing:
            raise ConfigError(f"layer {i} ({kind}): missing keys {sorted(missing)}")
        if kind == "softmax" and i != len(layers) - 1:
            raise ConfigError(f"layer {i}: softmax is only supported as the final layer")
        parsed.append(dict(spec))
    pcount = doc.get("parameter_count")
    return ArchConfig(
        input_shape=tuple(int(v) for v in shape),
        class_count=class_count,
        layers=parsed,
        name=str(doc.get("name", "unnamed")),
        parameter_count=None if pcount is None else int(pcount),
    )


def load_arch_config(path: str | Path) -> ArchConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: not valid JSON: {e}") from e
    return parse_arch_config(doc)
