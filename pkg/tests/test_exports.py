"""Tests for training and experiment exports."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from data.models import SynthSpec
from data.storage import atomic_write_csv, atomic_write_matrix
from data.synthetic import generate_synth
from eval.exports import report_document, write_train_outputs
from model.base import Hyperparams
from model.trainer import fit_mtmvcsf


def _report():
    spec = SynthSpec(
        name="export",
        n_tasks=1,
        classes_per_task=2,
        instances_per_class=8,
        mean_std_pairs=[(1.0, 1.0), (3.0, 1.0)],
        patch_side=3,
    )
    hp = Hyperparams(beta=0.1, gamma=0.01, k_per_view=4, kc_per=0.5, max_iters=3)
    return fit_mtmvcsf(generate_synth(spec), hp)


def test_report_document_fields() -> None:
    report = _report()
    document = report_document(report, {"preset": None})
    assert document.algorithm == "standard"
    assert document.seed == 0
    assert document.view_weights == report.state.view_weights.pi.tolist()
    assert len(document.terms) == len(report.objective_trace)
    assert document.timings_ms is None


def test_features_round_trip_through_csv(tmp_path: Path) -> None:
    report = _report()
    write_train_outputs(report, tmp_path)
    values = np.loadtxt(tmp_path / "features" / "task0.csv", delimiter=",", ndmin=2)
    np.testing.assert_array_equal(values, report.features[0].f)
    curve = (tmp_path / "loss_curve.csv").read_text().splitlines()
    assert len(curve) == len(report.objective_trace) + 1


def test_recorded_timings_go_into_report(tmp_path: Path) -> None:
    write_train_outputs(_report(), tmp_path, record_timings=True)
    document = json.loads((tmp_path / "report.json").read_text())
    assert "total" in document["timings_ms"]
    assert not (tmp_path / "timings.json").exists()


def test_csv_cells_use_round_trip_floats(tmp_path: Path) -> None:
    path = atomic_write_csv(tmp_path / "t.csv", ["a", "b", "c"], [[0.1, True, 3]])
    assert path.read_text() == "a,b,c\n0.10000000000000001,true,3\n"


def test_csv_cells_with_delimiters_are_quoted(tmp_path: Path) -> None:
    path = atomic_write_csv(tmp_path / "t.csv", ["stage", "params"], [["coarse", '{"beta": 0.1, "gamma": 0.01}']])
    assert path.read_text().splitlines()[1] == 'coarse,"{""beta"": 0.1, ""gamma"": 0.01}"'


def test_matrix_writer_puts_vectors_on_one_row(tmp_path: Path) -> None:
    path = atomic_write_matrix(tmp_path / "labels.csv", np.array([0, 2, 1]), fmt="%d")
    assert path.read_text() == "0,2,1\n"
    grid = atomic_write_matrix(tmp_path / "m.csv", np.array([[0.5, 1.0], [2.0, 0.25]]))
    assert grid.read_text() == "0.5,1\n2,0.25\n"
