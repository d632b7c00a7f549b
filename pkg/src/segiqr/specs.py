"""Grid-cell spec strings shared by the CLI and the benchmark harness.

Segmentations: "per-pixel", "slic:n_segments=64", "felzenszwalb:scale=100",
"quickshift:max_dist=10,sigma=1". Modes: "1d", "output",
"multilayer:per_layer=200,last_layers=8,seed=7". Attacks:
"fgsm:eps=0.02,0.06,0.1", "pgd:eps=0.1,steps=10", "deepfool".
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from segiqr.attribution.taps import TapSet, select_taps
from segiqr.errors import ConfigError
from segiqr.nn.network import Network
from segiqr.segmentation import (
    FelzParams,
    LabelMap,
    QuickshiftParams,
    SlicParams,
    felzenszwalb,
    per_pixel,
    quickshift,
    slic,
)


def _parse_kv(body: str, caster: dict, what: str) -> dict:
    out = {}
    if not body:
        return out
    for item in body.split(","):
        if "=" not in item:
            raise ConfigError(f"{what}: expected key=value, got {item!r}")
        key, value = item.split("=", 1)
        key = key.strip()
        if key not in caster:
            raise ConfigError(f"{what}: unknown key {key!r} (known: {sorted(caster)})")
        try:
            out[key] = caster[key](value)
        except ValueError as e:
            raise ConfigError(f"{what}: bad value for {key}: {value!r}") from e
    return out


@dataclass
class SegSpec:
    name: str           # per-pixel | felzenszwalb | quickshift | slic
    params: object | None
    label: str          # canonical cell label, e.g. "slic:n_segments=32"

    def segment(self, image_hwc: np.ndarray) -> LabelMap:
        if self.name == "per-pixel":
            return per_pixel(image_hwc)
        if self.name == "felzenszwalb":
            return felzenszwalb(image_hwc, self.params)
        if self.name == "quickshift":
            return quickshift(image_hwc, self.params)
        return slic(image_hwc, self.params)

    def describe(self) -> dict:
        out = {"method": self.name}
        if self.params is not None:
            out.update(vars(self.params))
        return out


def parse_segmentation_spec(text: str) -> SegSpec:
    name, _, body = text.partition(":")
    name = name.strip()
    if name == "per-pixel":
        if body:
            raise ConfigError("per-pixel takes no parameters")
        return SegSpec("per-pixel", None, "per-pixel")
    if name == "felzenszwalb":
        kv = _parse_kv(body, {"scale": float, "sigma": float, "min_size": int}, text)
        params = FelzParams(**kv).validate()
        return SegSpec(name, params, f"felzenszwalb:scale={params.scale:g}")
    if name == "quickshift":
        kv = _parse_kv(body, {"sigma": float, "max_dist": float,
                              "kernel_size": float, "ratio": float}, text)
        params = QuickshiftParams(**kv).validate()
        return SegSpec(name, params, f"quickshift:sigma={params.sigma:g},max_dist={params.max_dist:g}")
    if name == "slic":
        kv = _parse_kv(body, {"n_segments": int, "compactness": float,
                              "max_iter": int, "enforce_connectivity": lambda v: v.lower() == "true"}, text)
        params = SlicParams(**kv).validate()
        return SegSpec(name, params, f"slic:n_segments={params.n_segments}")
    raise ConfigError(f"unknown segmentation {name!r}")


@dataclass
class ModeSpec:
    mode: str
    per_layer: int | None = None
    last_layers: int | None = None
    seed: int = 0

    @property
    def label(self) -> str:
        if self.mode == "multilayer":
            return f"multilayer:per_layer={self.per_layer},last_layers={self.last_layers}"
        return self.mode

    def taps(self, net: Network) -> TapSet:
        return select_taps(net, self.mode, per_layer_count=self.per_layer,
                           last_n_layers=self.last_layers, seed=self.seed)


def parse_mode_spec(text: str) -> ModeSpec:
    name, _, body = text.partition(":")
    name = name.strip()
    if name in ("1d", "output"):
        if body:
            raise ConfigError(f"mode {name} takes no parameters")
        return ModeSpec(mode=name)
    if name == "multilayer":
        kv = _parse_kv(body, {"per_layer": int, "last_layers": int, "seed": int}, text)
        if "per_layer" not in kv or "last_layers" not in kv:
            raise ConfigError("multilayer mode needs per_layer and last_layers")
        return ModeSpec(mode="multilayer", per_layer=kv["per_layer"],
                        last_layers=kv["last_layers"], seed=kv.get("seed", 0))
    raise ConfigError(f"unknown mode {name!r} (known: 1d, output, multilayer)")


@dataclass
class AttackSpec:
    method: str
    epsilons: list[float]
    extra: dict

    @property
    def label(self) -> str:
        return self.method


def parse_attack_spec(text: str) -> AttackSpec:
    name, _, body = text.partition(":")
    name = name.strip()
    if name not in ("fgsm", "pgd", "deepfool"):
        raise ConfigError(f"unknown attack {name!r}")
    epsilons = [0.02, 0.06, 0.1]
    extra = {}
    if body:
        # eps takes a comma list, so glue comma-separated continuations back
        # onto the preceding key=value item before splitting
        parts = body.split(",")
        merged, i = [], 0
        while i < len(parts):
            if "=" in parts[i]:
                merged.append(parts[i])
            elif merged:
                merged[-1] += "," + parts[i]
            else:
                raise ConfigError(f"{text}: expected key=value, got {parts[i]!r}")
            i += 1
        for item in merged:
            key, value = item.split("=", 1)
            key = key.strip()
            if key == "eps":
                epsilons = [float(v) for v in value.split(",")]
            elif key == "steps":
                extra["steps"] = int(value)
            elif key == "step_size":
                extra["step_size"] = float(value)
            elif key == "random_start":
                extra["random_start"] = value.lower() == "true"
            elif key == "overshoot":
                extra["overshoot"] = float(value)
            elif key == "max_iter":
                extra["max_iter"] = int(value)
            elif key == "seed":
                extra["seed"] = int(value)
            else:
                raise ConfigError(f"{text}: unknown attack key {key!r}")
    return AttackSpec(method=name, epsilons=epsilons, extra=extra)
