"""Read and write dataset directories (manifest plus per-task CSV matrices)."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import List, Union

import numpy as np
from pydantic import ValidationError

from data.models import DatasetError, DatasetManifest, LabelSet, MultiViewDataset, TaskData, ViewMatrix
from data.storage import atomic_write_matrix, atomic_write_text

logger = logging.getLogger("mtmvcsf.dataset_files")

MANIFEST_NAME = "manifest.json"


def view_path(root: Path, t: int, v: int) -> Path:
    return root / f"task{t}" / f"view{v}.csv"


def labels_path(root: Path, t: int) -> Path:
    return root / f"task{t}" / "labels.csv"


def truth_path(root: Path, t: int) -> Path:
    return root / f"task{t}" / "truth.csv"


def _read_manifest(root: Path) -> DatasetManifest:
    path = root / MANIFEST_NAME
    if not path.is_file():
        raise DatasetError(f"missing file {path}")
    try:
        return DatasetManifest.model_validate_json(path.read_text(encoding="utf-8"))
    except ValidationError as exc:
        messages = "; ".join(error["msg"] for error in exc.errors())
        raise DatasetError(f"invalid manifest {path}: {messages}") from exc


def _read_matrix(path: Path, dtype=np.float64) -> np.ndarray:
    if not path.is_file():
        raise DatasetError(f"missing file {path}")
    try:
        return np.loadtxt(path, delimiter=",", dtype=dtype, ndmin=2)
    except ValueError as exc:
        raise DatasetError(f"cannot parse {path}: {exc}") from exc


def _read_index_row(path: Path, expected: int) -> np.ndarray:
    row = _read_matrix(path, dtype=np.int64).reshape(-1)
    if row.size != expected:
        raise DatasetError(f"{path}: expected {expected} entries, got {row.size}")
    return row


def load_dataset(root_path: Union[str, Path]) -> MultiViewDataset:
    """Load and validate a dataset directory against its manifest."""
    root = Path(root_path)
    manifest = _read_manifest(root)
    tasks: List[TaskData] = []
    for t in range(manifest.n_tasks):
        views: List[ViewMatrix] = []
        for v in range(manifest.n_views):
            values = _read_matrix(view_path(root, t, v))
            expected_rows = manifest.dims[t][v]
            if values.shape[0] != expected_rows:
                raise DatasetError(
                    f"task {t} view {v}: expected M={expected_rows} rows, got {values.shape[0]}"
                )
            if values.shape[1] != manifest.n_total:
                raise DatasetError(
                    f"task {t} view {v}: expected N={manifest.n_total} columns, got {values.shape[1]}"
                )
            if np.any(values < 0):
                raise DatasetError(f"task {t} view {v}: negative entry in view matrix")
            views.append(ViewMatrix(values))

        index = _read_index_row(labels_path(root, t), manifest.n_labeled)
        if index.min() < 0 or index.max() >= manifest.n_classes:
            raise DatasetError(f"task {t}: class index out of range [0, {manifest.n_classes})")
        truth = None
        if manifest.has_truth:
            truth = _read_index_row(truth_path(root, t), manifest.n_total)
        tasks.append(TaskData(tuple(views), LabelSet(index, manifest.n_classes), truth))

    ds = MultiViewDataset(name=manifest.name, tasks=tuple(tasks), n_classes=manifest.n_classes)
    logger.info(
        "loaded %s: T=%d V=%d C=%d N=%d N_l=%d",
        ds.name, ds.n_tasks, ds.n_views, ds.n_classes, ds.n_total, ds.n_labeled,
    )
    return ds


def save_dataset(ds: MultiViewDataset, root_path: Union[str, Path]) -> Path:
    """Write ``ds`` in the directory layout read by load_dataset."""
    root = Path(root_path)
    for t, task in enumerate(ds.tasks):
        for v, view in enumerate(task.views):
            atomic_write_matrix(view_path(root, t, v), view.values)
        atomic_write_matrix(labels_path(root, t), task.labels.class_index, fmt="%d")
        if task.truth is not None:
            atomic_write_matrix(truth_path(root, t), task.truth, fmt="%d")
    manifest = DatasetManifest.from_dataset(ds)
    # manifest last: a directory with a manifest is complete
    atomic_write_text(root / MANIFEST_NAME, manifest.model_dump_json(by_alias=True, indent=2) + "\n")
    logger.info("saved %s to %s", ds.name, root)
    return root
