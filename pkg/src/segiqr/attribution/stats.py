"""Empirical quantiles and the interquartile range reduction."""

from __future__ import annotations

import numpy as np


def empirical_quantile(values, p: float) -> float:
    """Smallest data value v with (count of values <= v) / N >= p."""
    values = np.asarray(values)
    if values.size == 0:
        raise ValueError("quantile of an empty list")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    ordered = np.sort(values, axis=None)
    fractions = np.arange(1, ordered.size + 1) / ordered.size
    return float(ordered[int(np.argmax(fractions >= p))])


def iqr(values) -> float:
    """Q(0.75) - Q(0.25) of a value set; never negative."""
    values = np.asarray(values)
    if values.size == 0:
        raise ValueError("iqr of an empty list")
    ordered = np.sort(values, axis=None)
    fractions = np.arange(1, ordered.size + 1) / ordered.size
    lo = int(np.argmax(fractions >= 0.25))
    hi = int(np.argmax(fractions >= 0.75))
    return float(ordered[hi] - ordered[lo])


def column_iqr(matrix: np.ndarray) -> np.ndarray:
    """Per-column IQR of a (rows x columns) matrix, matching iqr() exactly."""
    matrix = np.asarray(matrix)
    if matrix.ndim != 2 or matrix.shape[0] == 0:
        raise ValueError(f"need a non-empty 2-D matrix, got shape {matrix.shape}")
    k = matrix.shape[0]
    ordered = np.sort(matrix, axis=0)
    fractions = np.arange(1, k + 1) / k
    lo = int(np.argmax(fractions >= 0.25))
    hi = int(np.argmax(fractions >= 0.75))
    return ordered[hi] - ordered[lo]
