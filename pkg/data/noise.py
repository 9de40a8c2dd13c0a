"""Label-noise injection and instance subsampling."""

from __future__ import annotations

import logging
import math
from typing import List

import numpy as np

from data.models import DatasetError, LabelSet, MultiViewDataset, TaskData, ViewMatrix

logger = logging.getLogger("mtmvcsf.noise")


def flip_count(fraction: float, n_labeled: int) -> int:
    """Number of flipped labels per task, floor(fraction * N_l + 0.5)."""
    return int(math.floor(fraction * n_labeled + 0.5))


def inject_label_noise(ds: MultiViewDataset, fraction: float, seed: int) -> MultiViewDataset:
    """Replace the class of a seeded subset of labeled instances by a different class.

    Views and ground-truth labels are shared with the input; only the label sets change.
    """
    if not 0.0 <= fraction <= 0.5:
        raise ValueError(f"noise fraction must lie in [0, 0.5], got {fraction}")
    if fraction == 0.0:
        return ds
    if ds.n_classes < 2:
        raise DatasetError("label noise needs at least two classes")

    rng = np.random.default_rng(seed)
    count = flip_count(fraction, ds.n_labeled)
    tasks: List[TaskData] = []
    for task in ds.tasks:
        index = task.labels.class_index.copy()
        positions = rng.choice(ds.n_labeled, size=count, replace=False)
        # shift by 1..C-1 so the new class always differs
        offsets = rng.integers(1, ds.n_classes, size=count)
        index[positions] = (index[positions] + offsets) % ds.n_classes
        tasks.append(task.with_labels(LabelSet(index, ds.n_classes)))
    logger.info("flipped %d of %d labels per task (seed %d)", count, ds.n_labeled, seed)
    return ds.with_tasks(tuple(tasks))


def subsample_dataset(ds: MultiViewDataset, n_total: int, seed: int) -> MultiViewDataset:
    """Keep ``n_total`` instances per task, preserving the labeled share and layout."""
    if n_total < 2 or n_total > ds.n_total:
        raise ValueError(f"subsample size must lie in [2, {ds.n_total}], got {n_total}")
    n_labeled = int(math.floor(n_total * ds.n_labeled / ds.n_total + 0.5))
    n_labeled = min(max(n_labeled, 1), n_total - 1) if ds.n_unlabeled else n_total
    n_unlabeled = n_total - n_labeled

    rng = np.random.default_rng(seed)
    tasks: List[TaskData] = []
    for task in ds.tasks:
        labeled = np.sort(rng.choice(ds.n_labeled, size=n_labeled, replace=False))
        unlabeled = ds.n_labeled + np.sort(rng.choice(ds.n_unlabeled, size=n_unlabeled, replace=False))
        keep = np.concatenate([labeled, unlabeled])
        views = tuple(ViewMatrix(view.values[:, keep]) for view in task.views)
        labels = LabelSet(task.labels.class_index[labeled], ds.n_classes)
        truth = None if task.truth is None else task.truth[keep]
        tasks.append(TaskData(views=views, labels=labels, truth=truth))
    return MultiViewDataset(name=ds.name, tasks=tuple(tasks), n_classes=ds.n_classes)
