"""Tests for the dataset model, column normalization, and dataset directories."""

from __future__ import annotations

import json
import logging
from pathlib import Path

import numpy as np
import pytest

from data.loaders.dataset_files import load_dataset, save_dataset, view_path
from data.models import DatasetError, DatasetManifest, LabelSet, MultiViewDataset, TaskData, ViewMatrix
from data.preprocess.normalize import min_max_scale, normalize_columns, normalize_dataset


def _make_dataset(
    n_tasks: int = 2,
    n_views: int = 3,
    n_classes: int = 3,
    n_total: int = 12,
    n_labeled: int = 6,
    seed: int = 0,
    with_truth: bool = True,
) -> MultiViewDataset:
    rng = np.random.default_rng(seed)
    tasks = []
    for _ in range(n_tasks):
        views = tuple(ViewMatrix(rng.uniform(size=(4 + v, n_total))) for v in range(n_views))
        truth = rng.integers(0, n_classes, size=n_total)
        labels = LabelSet(truth[:n_labeled], n_classes)
        tasks.append(TaskData(views, labels, truth if with_truth else None))
    return MultiViewDataset(name="toy", tasks=tuple(tasks), n_classes=n_classes)


def test_normalize_columns_scales_to_unit_sum() -> None:
    result = normalize_columns(ViewMatrix(np.array([[1.0], [3.0]])))
    np.testing.assert_allclose(result.values[:, 0], [0.25, 0.75])
    assert result.zero_columns == 0


def test_normalize_columns_flags_zero_columns(caplog: pytest.LogCaptureFixture) -> None:
    matrix = ViewMatrix(np.array([[0.0, 1.0], [0.0, 1.0]]))
    with caplog.at_level(logging.WARNING, logger="mtmvcsf.preprocess"):
        result = normalize_columns(matrix)
    np.testing.assert_array_equal(result.values[:, 0], [0.0, 0.0])
    assert result.zero_columns == 1
    assert "1 all-zero column" in caplog.text


def test_normalize_columns_random_sums_and_idempotence() -> None:
    rng = np.random.default_rng(3)
    result = normalize_columns(ViewMatrix(rng.uniform(size=(5, 4))))
    np.testing.assert_allclose(result.values.sum(axis=0), np.ones(4), atol=1e-12)
    again = normalize_columns(result)
    np.testing.assert_allclose(again.values, result.values, rtol=0, atol=1e-15)


def test_normalize_columns_rejects_negative_entries() -> None:
    with pytest.raises(DatasetError):
        normalize_columns(ViewMatrix(np.array([[1.0, -0.5]])))


def test_normalize_dataset_touches_every_view() -> None:
    ds = normalize_dataset(_make_dataset())
    for task in ds.tasks:
        for view in task.views:
            np.testing.assert_allclose(view.values.sum(axis=0), 1.0, atol=1e-12)


def test_min_max_scale_hits_both_bounds() -> None:
    rng = np.random.default_rng(5)
    scaled = min_max_scale(rng.normal(size=(6, 7)))
    assert scaled.min() == 0.0
    assert scaled.max() == 1.0


def test_view_matrix_rejects_non_finite() -> None:
    with pytest.raises(DatasetError):
        ViewMatrix(np.array([[1.0, np.nan]]))


def test_label_set_one_hot_and_empty() -> None:
    labels = LabelSet(np.array([2, 0, 1, 2]), 3)
    one_hot = labels.one_hot
    assert one_hot.shape == (3, 4)
    np.testing.assert_array_equal(one_hot.sum(axis=0), np.ones(4))
    np.testing.assert_array_equal(np.argmax(one_hot, axis=0), [2, 0, 1, 2])
    with pytest.raises(DatasetError, match="empty labeled set"):
        LabelSet(np.array([], dtype=int), 3)
    with pytest.raises(DatasetError):
        LabelSet(np.array([0, 3]), 3)


def test_dataset_rejects_mismatched_columns() -> None:
    good = _make_dataset(n_tasks=1)
    task = good.tasks[0]
    bad_views = (ViewMatrix(np.ones((4, 13))),) + task.views[1:]
    bad_task = TaskData(bad_views, task.labels, np.append(task.truth, 0))
    with pytest.raises(DatasetError, match="task 1 view 0: expected N=12 columns, got 13"):
        MultiViewDataset("toy", (task, bad_task), 3)


def test_dataset_shape_properties() -> None:
    ds = _make_dataset()
    assert (ds.n_tasks, ds.n_views, ds.n_total, ds.n_labeled, ds.n_unlabeled) == (2, 3, 12, 6, 6)
    assert ds.dims == [[4, 5, 6], [4, 5, 6]]
    assert ds.has_truth
    assert ds.stack_views(0, "unlabeled").shape == (15, 6)
    np.testing.assert_array_equal(ds.unlabeled_truth(1), ds.tasks[1].truth[6:])


def test_unlabeled_truth_requires_truth() -> None:
    ds = _make_dataset(with_truth=False)
    with pytest.raises(DatasetError):
        ds.unlabeled_truth(0)


def test_save_then_load_round_trip(tmp_path: Path) -> None:
    ds = normalize_dataset(_make_dataset())
    save_dataset(ds, tmp_path / "toy")
    loaded = load_dataset(tmp_path / "toy")
    assert loaded.equals(ds)
    for task in loaded.tasks:
        for view in task.views:
            np.testing.assert_allclose(view.values.sum(axis=0), 1.0, atol=1e-12)


def test_manifest_uses_short_field_names(tmp_path: Path) -> None:
    save_dataset(_make_dataset(), tmp_path)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert {"name", "T", "V", "C", "N", "N_l", "dims"} <= set(manifest)
    assert manifest["format_version"] == 1
    assert DatasetManifest.model_validate(manifest).n_labeled == 6


def test_load_rejects_empty_labeled_set(tmp_path: Path) -> None:
    save_dataset(_make_dataset(), tmp_path)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    manifest["N_l"] = 0
    (tmp_path / "manifest.json").write_text(json.dumps(manifest))
    with pytest.raises(DatasetError, match="empty labeled set"):
        load_dataset(tmp_path)


def test_load_reports_extra_column(tmp_path: Path) -> None:
    save_dataset(_make_dataset(), tmp_path)
    path = view_path(tmp_path, 1, 2)
    lines = path.read_text().splitlines()
    path.write_text("\n".join(line + ",0.5" for line in lines) + "\n")
    with pytest.raises(DatasetError, match="task 1 view 2: expected N=12 columns, got 13"):
        load_dataset(tmp_path)


def test_load_rejects_negative_entry(tmp_path: Path) -> None:
    save_dataset(_make_dataset(), tmp_path)
    path = view_path(tmp_path, 0, 0)
    lines = path.read_text().splitlines()
    cells = lines[0].split(",")
    cells[0] = "-1"
    lines[0] = ",".join(cells)
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(DatasetError, match="negative"):
        load_dataset(tmp_path)


def test_load_rejects_class_index_out_of_range(tmp_path: Path) -> None:
    save_dataset(_make_dataset(), tmp_path)
    (tmp_path / "task0" / "labels.csv").write_text("0,1,2,3,0,1\n")
    with pytest.raises(DatasetError, match="out of range"):
        load_dataset(tmp_path)


def test_load_reports_missing_file(tmp_path: Path) -> None:
    save_dataset(_make_dataset(), tmp_path)
    view_path(tmp_path, 1, 1).unlink()
    with pytest.raises(DatasetError, match="missing file"):
        load_dataset(tmp_path)


def test_save_to_unwritable_path(tmp_path: Path) -> None:
    blocker = tmp_path / "blocker"
    blocker.write_text("not a directory")
    with pytest.raises(DatasetError):
        save_dataset(_make_dataset(), blocker / "dataset")
