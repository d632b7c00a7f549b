"""Threshold-free ranking metric for the benign/adversarial detector."""

from __future__ import annotations

import numpy as np

from segiqr.errors import ConfigError


def auc(scores, labels) -> float:
    """Probability that a random positive outranks a random negative,
    ties counted half. Computed from average ranks in O(n log n)."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise ConfigError("scores and labels must be equal-length vectors")
    pos = labels == 1
    n_pos = int(pos.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ConfigError("AUC needs both classes present")
    order = np.argsort(scores, kind="mergesort")
    uniq, first, counts = np.unique(scores[order], return_index=True, return_counts=True)
    group_rank = first + (counts + 1) / 2.0  # 1-based average rank per tie group
    ranks = group_rank[np.searchsorted(uniq, scores)]
    rank_sum = ranks[pos].sum()
    return float((rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def accuracy_at_half(probabilities, labels) -> float:
    probabilities = np.asarray(probabilities, dtype=np.float64)
    labels = np.asarray(labels)
    return float(((probabilities >= 0.5).astype(np.int64) == labels).mean())
