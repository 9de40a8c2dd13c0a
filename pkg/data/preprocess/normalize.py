"""Column normalization and min-max scaling of view matrices."""

from __future__ import annotations

import logging

import numpy as np

from data.models import DatasetError, MultiViewDataset, ViewMatrix

logger = logging.getLogger("mtmvcsf.preprocess")


def normalize_columns(x: ViewMatrix) -> ViewMatrix:
    """Scale every nonzero column to unit sum; all-zero columns are kept and counted."""
    values = x.values
    if np.any(values < 0):
        raise DatasetError("normalize_columns requires nonnegative entries")
    sums = values.sum(axis=0)
    zero = sums == 0
    scale = np.where(zero, 1.0, sums)
    normalized = values / scale
    zero_count = int(zero.sum())
    if zero_count:
        logger.warning("%d all-zero column(s) left unnormalized", zero_count)
    return ViewMatrix(normalized, zero_columns=zero_count)


def normalize_dataset(ds: MultiViewDataset) -> MultiViewDataset:
    """Apply normalize_columns to every view of every task."""
    tasks = tuple(
        task.with_views(tuple(normalize_columns(view) for view in task.views))
        for task in ds.tasks
    )
    return ds.with_tasks(tasks)


def min_max_scale(values: np.ndarray) -> np.ndarray:
    """Map all entries of ``values`` linearly onto [0, 1]."""
    low = values.min()
    high = values.max()
    if high == low:
        return np.zeros_like(values, dtype=np.float64)
    scaled = (values - low) / (high - low)
    # pin the extremes exactly
    scaled[values == low] = 0.0
    scaled[values == high] = 1.0
    return scaled
