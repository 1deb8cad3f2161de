"""Batch-means error bars for correlated Monte Carlo series."""
from __future__ import annotations

import math

import numpy as np


def batch_means(x, n_batches: int = 50) -> tuple[float, float]:
    """Mean and standard error from ``n_batches`` contiguous batches.

    Trailing samples that do not fill a batch are dropped.  With fewer
    samples than batches every sample is its own batch.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.size == 0:
        raise ValueError("empty series")
    n_batches = min(n_batches, x.size)
    if n_batches < 2:
        return float(x.mean()), float("nan")
    b = x.size // n_batches
    means = x[: b * n_batches].reshape(n_batches, b).mean(axis=1)
    return float(means.mean()), float(means.std(ddof=1) / math.sqrt(n_batches))
