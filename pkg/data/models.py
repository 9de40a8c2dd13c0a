"""Data model for multi-task multi-view datasets."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from model.base import MTMVError


class DatasetError(MTMVError, ValueError):
    """Raised when a dataset is malformed or cannot be read or written."""


def _frozen(values: np.ndarray, dtype) -> np.ndarray:
    array = np.array(values, dtype=dtype, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class ViewMatrix:
    """Features x instances matrix of one view; columns are instances."""

    values: np.ndarray
    zero_columns: int = 0

    def __post_init__(self) -> None:
        values = _frozen(self.values, np.float64)
        if values.ndim != 2:
            raise DatasetError(f"view matrix must be 2-D, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise DatasetError("view matrix contains NaN or Inf entries")
        object.__setattr__(self, "values", values)

    @property
    def n_features(self) -> int:
        return self.values.shape[0]

    @property
    def n_instances(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True, eq=False)
class LabelSet:
    """Class indices of the labeled prefix of a task."""

    class_index: np.ndarray
    n_classes: int

    def __post_init__(self) -> None:
        index = _frozen(np.asarray(self.class_index).reshape(-1), np.int64)
        if index.size < 1:
            raise DatasetError("empty labeled set")
        if self.n_classes < 1:
            raise DatasetError(f"n_classes must be >= 1, got {self.n_classes}")
        if index.min() < 0 or index.max() >= self.n_classes:
            msg = f"class index out of range [0, {self.n_classes}): {index.min()}..{index.max()}"
            raise DatasetError(msg)
        object.__setattr__(self, "class_index", index)

    @property
    def n_labeled(self) -> int:
        return int(self.class_index.size)

    @property
    def one_hot(self) -> np.ndarray:
        """C x N_l indicator matrix with a single 1 per column."""
        y = np.zeros((self.n_classes, self.n_labeled))
        y[self.class_index, np.arange(self.n_labeled)] = 1.0
        return y


@dataclass(frozen=True, eq=False)
class TaskData:
    """All views of one task plus its labels; labeled instances come first."""

    views: Tuple[ViewMatrix, ...]
    labels: LabelSet
    truth: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "views", tuple(self.views))
        if not self.views:
            raise DatasetError("a task needs at least one view")
        if self.truth is not None:
            truth = _frozen(np.asarray(self.truth).reshape(-1), np.int64)
            if truth.size != self.n_instances:
                msg = f"truth has {truth.size} entries, expected {self.n_instances}"
                raise DatasetError(msg)
            if truth.min() < 0 or truth.max() >= self.labels.n_classes:
                raise DatasetError("truth label out of range")
            object.__setattr__(self, "truth", truth)

    @property
    def n_instances(self) -> int:
        return self.views[0].n_instances

    @property
    def dims(self) -> List[int]:
        return [view.n_features for view in self.views]

    def with_views(self, views: Tuple[ViewMatrix, ...]) -> "TaskData":
        return replace(self, views=tuple(views))

    def with_labels(self, labels: LabelSet) -> "TaskData":
        return replace(self, labels=labels)


@dataclass(frozen=True, eq=False)
class MultiViewDataset:
    """T tasks of V views each, sharing N, N_l and the label-first layout."""

    name: str
    tasks: Tuple[TaskData, ...]
    n_classes: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "tasks", tuple(self.tasks))
        if not self.tasks:
            raise DatasetError("dataset has no tasks")
        n_views = len(self.tasks[0].views)
        n_total = self.tasks[0].n_instances
        n_labeled = self.tasks[0].labels.n_labeled
        for t, task in enumerate(self.tasks):
            if len(task.views) != n_views:
                raise DatasetError(f"task {t} has {len(task.views)} views, expected {n_views}")
            for v, view in enumerate(task.views):
                if view.n_instances != n_total:
                    msg = (
                        f"task {t} view {v}: expected N={n_total} columns, "
                        f"got {view.n_instances}"
                    )
                    raise DatasetError(msg)
            if task.labels.n_labeled != n_labeled:
                raise DatasetError(f"task {t} has {task.labels.n_labeled} labels, expected {n_labeled}")
            if task.labels.n_classes != self.n_classes:
                raise DatasetError(f"task {t} declares {task.labels.n_classes} classes, expected {self.n_classes}")
        if n_labeled > n_total:
            raise DatasetError(f"N_l={n_labeled} exceeds N={n_total}")

    @property
    def n_tasks(self) -> int:
        return len(self.tasks)

    @property
    def n_views(self) -> int:
        return len(self.tasks[0].views)

    @property
    def n_total(self) -> int:
        return self.tasks[0].n_instances

    @property
    def n_labeled(self) -> int:
        return self.tasks[0].labels.n_labeled

    @property
    def n_unlabeled(self) -> int:
        return self.n_total - self.n_labeled

    @property
    def dims(self) -> List[List[int]]:
        return [task.dims for task in self.tasks]

    @property
    def has_truth(self) -> bool:
        return all(task.truth is not None for task in self.tasks)

    def with_tasks(self, tasks: Tuple[TaskData, ...]) -> "MultiViewDataset":
        return replace(self, tasks=tuple(tasks))

    def equals(self, other: "MultiViewDataset") -> bool:
        """Exact comparison of names, shapes, values, and labels."""
        if (self.name, self.n_classes, self.dims, self.n_labeled) != (
            other.name,
            other.n_classes,
            other.dims,
            other.n_labeled,
        ):
            return False
        for mine, theirs in zip(self.tasks, other.tasks):
            if not np.array_equal(mine.labels.class_index, theirs.labels.class_index):
                return False
            if (mine.truth is None) != (theirs.truth is None):
                return False
            if mine.truth is not None and not np.array_equal(mine.truth, theirs.truth):
                return False
            for a, b in zip(mine.views, theirs.views):
                if not np.array_equal(a.values, b.values):
                    return False
        return True

    def unlabeled_truth(self, t: int) -> np.ndarray:
        """Clean class indices of the unlabeled suffix of task ``t``."""
        truth = self.tasks[t].truth
        if truth is None:
            raise DatasetError(f"task {t} carries no ground-truth labels for evaluation")
        return truth[self.n_labeled:]

    def stack_views(self, t: int, part: str = "all") -> np.ndarray:
        """Raw views of task ``t`` stacked row-wise, restricted to a column part."""
        stacked = np.vstack([view.values for view in self.tasks[t].views])
        if part == "labeled":
            return stacked[:, : self.n_labeled]
        if part == "unlabeled":
            return stacked[:, self.n_labeled:]
        if part == "all":
            return stacked
        raise ValueError(f"unknown column part {part!r}")


class DatasetManifest(BaseModel):
    """Contents of ``manifest.json`` in a dataset directory."""

    model_config = ConfigDict(populate_by_name=True)

    name: str
    n_tasks: int = Field(alias="T", ge=1)
    n_views: int = Field(alias="V", ge=1)
    n_classes: int = Field(alias="C", ge=1)
    n_total: int = Field(alias="N", ge=1)
    n_labeled: int = Field(alias="N_l")
    dims: List[List[int]]
    has_truth: bool = False
    format_version: int = 1

    @field_validator("n_labeled")
    @classmethod
    def ensure_labeled_set(cls, value: int) -> int:
        if value < 1:
            raise ValueError("empty labeled set")
        return value

    @model_validator(mode="after")
    def check_shape(self) -> "DatasetManifest":
        if self.n_labeled > self.n_total:
            raise ValueError(f"N_l={self.n_labeled} exceeds N={self.n_total}")
        if len(self.dims) != self.n_tasks or any(len(row) != self.n_views for row in self.dims):
            raise ValueError(f"dims must be a {self.n_tasks} x {self.n_views} array")
        return self

    @classmethod
    def from_dataset(cls, ds: MultiViewDataset) -> "DatasetManifest":
        return cls(
            name=ds.name,
            n_tasks=ds.n_tasks,
            n_views=ds.n_views,
            n_classes=ds.n_classes,
            n_total=ds.n_total,
            n_labeled=ds.n_labeled,
            dims=ds.dims,
            has_truth=ds.has_truth,
        )


class SynthSpec(BaseModel):
    """Recipe for a Gaussian-patch synthetic dataset filtered into five views."""

    name: str = "synth"
    n_tasks: int = Field(default=3, ge=1)
    classes_per_task: int = Field(default=3, ge=1)
    instances_per_class: int = Field(default=200, ge=1)
    mean_std_pairs: List[Tuple[float, float]] = Field(
        default_factory=lambda: [(1.0, 1.0), (2.0, 2.0), (3.0, 3.0)]
    )
    patch_side: int = 10
    labeled_fraction: float = Field(default=0.5, gt=0.0, le=1.0)
    seed: int = 0

    @field_validator("patch_side")
    @classmethod
    def ensure_patch_side(cls, value: int) -> int:
        if value < 3:
            raise ValueError(f"patch_side must be >= 3, got {value}")
        return value

    @field_validator("mean_std_pairs")
    @classmethod
    def ensure_positive_std(cls, pairs: List[Tuple[float, float]]) -> List[Tuple[float, float]]:
        for mean, std in pairs:
            if std <= 0:
                raise ValueError(f"standard deviation must be > 0, got {std} (mean {mean})")
        return pairs

    @model_validator(mode="after")
    def check_classes(self) -> "SynthSpec":
        if len(self.mean_std_pairs) != self.classes_per_task:
            msg = (
                f"{len(self.mean_std_pairs)} (mean, std) pairs given for "
                f"{self.classes_per_task} classes"
            )
            raise ValueError(msg)
        return self

    @property
    def n_total(self) -> int:
        return self.classes_per_task * self.instances_per_class

    @property
    def n_labeled(self) -> int:
        return max(1, int(np.floor(self.labeled_fraction * self.n_total + 0.5)))
