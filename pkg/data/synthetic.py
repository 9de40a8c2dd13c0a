"""Gaussian-patch synthetic datasets filtered into five views."""

from __future__ import annotations

import logging
from typing import Callable, Dict, List, Tuple

import numpy as np
from scipy import ndimage

from data.models import LabelSet, MultiViewDataset, SynthSpec, TaskData, ViewMatrix
from data.preprocess.normalize import min_max_scale

logger = logging.getLogger("mtmvcsf.synthetic")

GAUSSIAN_SIGMA = 0.5
LAPLACIAN_ALPHA = 0.2

SYNTH1 = SynthSpec(
    name="synth1",
    n_tasks=3,
    classes_per_task=3,
    instances_per_class=200,
    mean_std_pairs=[(1.0, 1.0), (2.0, 2.0), (3.0, 3.0)],
)

SYNTH2 = SynthSpec(
    name="synth2",
    n_tasks=4,
    classes_per_task=4,
    instances_per_class=200,
    mean_std_pairs=[(1.0, 1.0), (2.0, 2.0), (3.0, 3.0), (4.0, 4.0)],
)


def averaging_kernel() -> np.ndarray:
    return np.full((3, 3), 1.0 / 9.0)


def gaussian_kernel(sigma: float = GAUSSIAN_SIGMA) -> np.ndarray:
    """3x3 Gaussian exp(-(dx^2+dy^2)/(2 sigma^2)) normalized to unit sum."""
    offsets = np.arange(-1, 2)
    dx, dy = np.meshgrid(offsets, offsets)
    kernel = np.exp(-(dx**2 + dy**2) / (2.0 * sigma**2))
    return kernel / kernel.sum()


def laplacian_kernel(alpha: float = LAPLACIAN_ALPHA) -> np.ndarray:
    corner = alpha / 4.0
    edge = (1.0 - alpha) / 4.0
    kernel = np.array(
        [
            [corner, edge, corner],
            [edge, -1.0, edge],
            [corner, edge, corner],
        ]
    )
    return (4.0 / (1.0 + alpha)) * kernel


def prewitt_kernel() -> np.ndarray:
    return np.array([[1.0, 1.0, 1.0], [0.0, 0.0, 0.0], [-1.0, -1.0, -1.0]])


def _linear_filter(kernel: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
    # correlate applies the kernel as written; convolve would flip the Prewitt rows
    return lambda patch: ndimage.correlate(patch, kernel, mode="nearest")


def _maximum_filter(patch: np.ndarray) -> np.ndarray:
    return ndimage.maximum_filter(patch, size=3, mode="nearest")


def filter_bank() -> Dict[str, Callable[[np.ndarray], np.ndarray]]:
    """The five view extractors in view order."""
    return {
        "average": _linear_filter(averaging_kernel()),
        "maximum": _maximum_filter,
        "gaussian": _linear_filter(gaussian_kernel()),
        "laplacian": _linear_filter(laplacian_kernel()),
        "prewitt": _linear_filter(prewitt_kernel()),
    }


def _sample_task(spec: SynthSpec, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    side = spec.patch_side
    patches: List[np.ndarray] = []
    classes: List[np.ndarray] = []
    for c, (mean, std) in enumerate(spec.mean_std_pairs):
        patches.append(rng.normal(mean, std, size=(spec.instances_per_class, side, side)))
        classes.append(np.full(spec.instances_per_class, c, dtype=np.int64))
    return np.concatenate(patches), np.concatenate(classes)


def _extract_views(patches: np.ndarray) -> List[ViewMatrix]:
    views: List[ViewMatrix] = []
    for extractor in filter_bank().values():
        # flatten row-major: one patch per column
        columns = np.stack([extractor(patch).reshape(-1) for patch in patches], axis=1)
        views.append(ViewMatrix(min_max_scale(columns)))
    return views


def generate_synth(spec: SynthSpec) -> MultiViewDataset:
    """Draw per-class Gaussian patches, filter them into five views, shuffle, and split."""
    rng = np.random.default_rng(spec.seed)
    n_labeled = spec.n_labeled
    tasks: List[TaskData] = []
    for t in range(spec.n_tasks):
        patches, classes = _sample_task(spec, rng)
        order = rng.permutation(spec.n_total)
        patches = patches[order]
        classes = classes[order]
        views = _extract_views(patches)
        labels = LabelSet(classes[:n_labeled], spec.classes_per_task)
        tasks.append(TaskData(views=tuple(views), labels=labels, truth=classes))
        logger.debug("generated task %d of %s (N=%d, N_l=%d)", t, spec.name, spec.n_total, n_labeled)
    return MultiViewDataset(name=spec.name, tasks=tuple(tasks), n_classes=spec.classes_per_task)
