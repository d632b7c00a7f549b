from segiqr.segmentation.color import gaussian_smooth, rgb_to_lab
from segiqr.segmentation.felzenszwalb import FelzParams, felzenszwalb
from segiqr.segmentation.label_map import (
    LabelMap,
    connected_components,
    per_pixel,
    read_label_maps,
    relabel_contiguous,
    write_label_maps,
)
from segiqr.segmentation.quickshift import QuickshiftParams, quickshift
from segiqr.segmentation.slic import SlicParams, slic

__all__ = [
    "FelzParams",
    "LabelMap",
    "QuickshiftParams",
    "SlicParams",
    "connected_components",
    "felzenszwalb",
    "gaussian_smooth",
    "per_pixel",
    "quickshift",
    "read_label_maps",
    "relabel_contiguous",
    "rgb_to_lab",
    "slic",
    "write_label_maps",
]
