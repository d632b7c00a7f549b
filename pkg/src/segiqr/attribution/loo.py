"""Leave-one-out occlusion: black out one segment at a time and record the
absolute change of every tapped node against the unoccluded image."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from segiqr.errors import ConfigError
from segiqr.attribution.taps import TapGather, TapSet
from segiqr.nn.network import Network
from segiqr.segmentation.label_map import LabelMap

# occlusions are forwarded in fixed-size groups; group boundaries depend only
# on the segment count, which keeps repeated runs bit-identical
OCCLUSION_CHUNK = 128


@dataclass
class AttributionMatrix:
    image_id: str
    values: np.ndarray  # (occlusions k, taps d), non-negative float32

    @property
    def occlusion_count(self) -> int:
        return self.values.shape[0]

    @property
    def dimension(self) -> int:
        return self.values.shape[1]


def occlude(image: np.ndarray, label_map: LabelMap, segment_id: int) -> np.ndarray:
    """Copy of the CxHxW image with the segment's pixels zeroed in every channel."""
    if not 0 <= segment_id < label_map.segment_count:
        raise ConfigError(
            f"segment id {segment_id} out of range [0, {label_map.segment_count})"
        )
    out = np.array(image, dtype=np.float32, copy=True)
    out[:, label_map.labels == segment_id] = 0.0
    return out


def _resolve_entries(taps: TapSet, net: Network, predicted_class: int):
    if taps.mode == "1d":
        return ((net.softmax_index, predicted_class),)
    return taps.entries


def loo_attributions(net: Network, image: np.ndarray, label_map: LabelMap,
                     taps: TapSet, image_id: str = "") -> AttributionMatrix:
    """Exactly k+1 forward passes: one baseline plus one per segment."""
    return _loo_multi(net, image, label_map, [taps], image_id)[0]


def _loo_multi(net: Network, image: np.ndarray, label_map: LabelMap,
               tap_sets: list[TapSet], image_id: str = "") -> list[AttributionMatrix]:
    """One occlusion sweep serving several tap sets.

    The forward passes do not depend on what is tapped, so each returned
    matrix is bit-identical to a dedicated loo_attributions() call.
    """
    image = np.asarray(image, dtype=np.float32)
    if image.ndim != 3:
        raise ConfigError(f"expected a single CxHxW image, got shape {image.shape}")
    if image.shape[1:] != (label_map.height, label_map.width):
        raise ConfigError(
            f"label map {label_map.height}x{label_map.width} does not match image {image.shape}"
        )
    for t in tap_sets:
        if t.mode == "1d" and net.softmax_index is None:
            raise ConfigError("1d taps need a softmax output layer")

    # the tapped layers are known before the predicted class is; only the
    # node index of 1d mode is image-dependent, so one baseline pass suffices
    layer_ids = sorted({li
                        for t in tap_sets
                        for li in ([net.softmax_index] if t.mode == "1d"
                                   else {layer for layer, _ in t.entries})})
    baseline = net.forward(image[None], taps=layer_ids)
    predicted = int(baseline.probs[0].argmax())

    entry_lists = [_resolve_entries(t, net, predicted) for t in tap_sets]
    gathers = [TapGather(net, entries) for entries in entry_lists]
    base_rows = [g.values(baseline.trace, 1)[0] for g in gathers]

    k = label_map.segment_count
    results = [np.empty((k, g.dimension), dtype=np.float32) for g in gathers]
    for start in range(0, k, OCCLUSION_CHUNK):
        ids = range(start, min(start + OCCLUSION_CHUNK, k))
        batch = np.stack([occlude(image, label_map, sid) for sid in ids])
        res = net.forward(batch, taps=layer_ids)
        for g, base, out in zip(gathers, base_rows, results):
            out[start:start + len(batch)] = np.abs(g.values(res.trace, len(batch)) - base)
    return [AttributionMatrix(image_id=image_id, values=v) for v in results]
