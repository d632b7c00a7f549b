"""Color conversion and Gaussian pre-smoothing shared by the segmenters."""

from __future__ import annotations

import numpy as np

# sRGB -> XYZ matrix and D65 white point
_RGB2XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ],
    dtype=np.float64,
)
_WHITE = np.array([0.95047, 1.0, 1.08883], dtype=np.float64)
_DELTA = 6.0 / 29.0


def rgb_to_lab(image: np.ndarray) -> np.ndarray:
    """sRGB in [0,1] to CIELAB under D65. Returns float32 HxWx3."""
    rgb = np.asarray(image, dtype=np.float64)
    linear = np.where(rgb <= 0.04045, rgb / 12.92, ((rgb + 0.055) / 1.055) ** 2.4)
    xyz = linear @ _RGB2XYZ.T
    t = xyz / _WHITE
    f = np.where(t > _DELTA**3, np.cbrt(t), t / (3 * _DELTA**2) + 4.0 / 29.0)
    lab = np.empty_like(xyz)
    lab[..., 0] = 116.0 * f[..., 1] - 16.0
    lab[..., 1] = 500.0 * (f[..., 0] - f[..., 1])
    lab[..., 2] = 200.0 * (f[..., 1] - f[..., 2])
    return lab.astype(np.float32)


def _gaussian_kernel(sigma: float) -> np.ndarray:
    radius = int(np.ceil(3.0 * sigma))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return k / k.sum()


def _pad_reflect(arr: np.ndarray, radius: int, axis: int) -> np.ndarray:
    # mirror without repeating the edge sample; degenerate axes repeat it
    size = arr.shape[axis]
    width = [(0, 0)] * arr.ndim
    if size == 1:
        width[axis] = (radius, radius)
        return np.pad(arr, width, mode="edge")
    out = arr
    remaining = radius
    while remaining > 0:
        step = min(remaining, out.shape[axis] - 1)
        width[axis] = (step, step)
        out = np.pad(out, width, mode="reflect")
        remaining -= step
    return out


def _convolve_axis(arr: np.ndarray, kernel: np.ndarray, axis: int) -> np.ndarray:
    radius = (len(kernel) - 1) // 2
    padded = _pad_reflect(arr, radius, axis)
    win = np.lib.stride_tricks.sliding_window_view(padded, len(kernel), axis=axis)
    return np.tensordot(win, kernel, axes=([-1], [0]))


def gaussian_smooth(image: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian blur, kernel truncated at radius ceil(3*sigma),
    reflect padding. sigma = 0 is the identity."""
    image = np.asarray(image, dtype=np.float32)
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if sigma == 0:
        return image.copy()
    kernel = _gaussian_kernel(sigma)
    out = image.astype(np.float64)
    out = _convolve_axis(out, kernel, axis=0)
    out = _convolve_axis(out, kernel, axis=1)
    return out.astype(np.float32)
