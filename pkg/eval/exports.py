"""Write training reports, loss curves, latent features, and experiment tables."""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from pydantic import BaseModel

from data.storage import atomic_write_csv, atomic_write_matrix, atomic_write_text
from eval.metrics import NMI_NORMALIZATION
from eval.protocols import ComparisonTable, GridResult, SizeRow, SummaryRow, SweepTable
from model.trainer import TrainReport

logger = logging.getLogger("mtmvcsf.exports")

FORMAT_VERSION = 1


class TrainReportDocument(BaseModel):
    """JSON form of a TrainReport."""

    format_version: int = FORMAT_VERSION
    algorithm: str
    objective_trace: List[float]
    normalized_trace: List[float]
    converged: bool
    iterations: int
    hyperparams: Dict[str, Any]
    seed: int
    view_weights: List[float]
    terms: List[Dict[str, float]]
    timings_ms: Optional[Dict[str, float]] = None
    config: Dict[str, Any] = {}


def report_document(
    report: TrainReport,
    config: Optional[Dict[str, Any]] = None,
    record_timings: bool = False,
) -> TrainReportDocument:
    return TrainReportDocument(
        algorithm=report.algorithm.value,
        objective_trace=report.objective_trace,
        normalized_trace=report.normalized_trace,
        converged=report.converged,
        iterations=report.iterations,
        hyperparams=report.hyperparams.model_dump(by_alias=True),
        seed=report.hyperparams.seed,
        view_weights=report.state.view_weights.pi.tolist(),
        terms=[{**terms.scalars(), "total": terms.total} for terms in report.terms],
        timings_ms=report.timings_ms if record_timings else None,
        config=config or {},
    )


def _write_json(path: Path, payload: BaseModel | Dict[str, Any]) -> Path:
    if isinstance(payload, BaseModel):
        text = payload.model_dump_json(indent=2, exclude_none=True)
    else:
        text = json.dumps(payload, indent=2, sort_keys=True)
    return atomic_write_text(path, text + "\n")


def write_train_outputs(
    report: TrainReport,
    out_dir: Path,
    config: Optional[Dict[str, Any]] = None,
    record_timings: bool = False,
) -> List[Path]:
    """report.json, loss_curve.csv, and features/task<t>.csv plus features/block_map.json."""
    out_dir = Path(out_dir)
    written = [_write_json(out_dir / "report.json", report_document(report, config, record_timings))]
    curve = zip(range(len(report.objective_trace)), report.objective_trace, report.normalized_trace)
    written.append(atomic_write_csv(out_dir / "loss_curve.csv", ["iter", "objective", "normalized"], curve))
    features = report.features
    for t, joint in enumerate(features):
        written.append(atomic_write_matrix(out_dir / "features" / f"task{t}.csv", joint.f))
    block_map = {"n_labeled": features[0].n_labeled, "rows": features[0].block_map()}
    written.append(_write_json(out_dir / "features" / "block_map.json", {"format_version": FORMAT_VERSION, **block_map}))
    if not record_timings:
        written.append(_write_json(out_dir / "timings.json", {"timings_ms": report.timings_ms}))
    logger.info("wrote %d training output file(s) to %s", len(written), out_dir)
    return written


def write_sweep(table: SweepTable, out_dir: Path, config: Optional[Dict[str, Any]] = None) -> List[Path]:
    out_dir = Path(out_dir)
    rows = (
        [cell.algorithm.value, cell.fraction, cell.seed, cell.accuracy, cell.iterations, cell.converged]
        for cell in table.cells
    )
    header = ["algorithm", "fraction", "seed", "accuracy", "iterations", "converged"]
    written = [atomic_write_csv(out_dir / "sweep.csv", header, rows)]
    summary = {
        "format_version": FORMAT_VERSION,
        "summary": [row.model_dump(mode="json") for row in table.summary],
        "config": config or {},
    }
    written.append(_write_json(out_dir / "summary.json", summary))
    return written


def write_comparisons(
    tables: Sequence[ComparisonTable],
    summary: Sequence[SummaryRow],
    out_dir: Path,
    config: Optional[Dict[str, Any]] = None,
) -> List[Path]:
    out_dir = Path(out_dir)
    rows = ([table.seed, row.arm, row.task, row.metric, row.value] for table in tables for row in table.rows)
    written = [atomic_write_csv(out_dir / "comparison.csv", ["seed", "arm", "task", "metric", "value"], rows)]
    summary_rows = ([r.arm, r.task, r.metric, r.mean, r.std, r.n] for r in summary)
    header = ["arm", "task", "metric", "mean", "std", "n"]
    written.append(atomic_write_csv(out_dir / "comparison_summary.csv", header, summary_rows))
    document = {
        "format_version": FORMAT_VERSION,
        "nmi_normalization": NMI_NORMALIZATION,
        "tables": [table.model_dump(mode="json") for table in tables],
        "summary": [row.model_dump(mode="json") for row in summary],
        "config": config or {},
    }
    written.append(_write_json(out_dir / "comparison.json", document))
    return written


def write_size_sweep(rows: Sequence[SizeRow], out_dir: Path, config: Optional[Dict[str, Any]] = None) -> List[Path]:
    out_dir = Path(out_dir)
    csv_rows = ([r.size, r.mean_nmi, r.std_nmi, r.n_seeds] for r in rows)
    written = [atomic_write_csv(out_dir / "sizes.csv", ["size", "mean_nmi", "std_nmi", "n_seeds"], csv_rows)]
    document = {
        "format_version": FORMAT_VERSION,
        "rows": [row.model_dump(mode="json") for row in rows],
        "config": config or {},
    }
    written.append(_write_json(out_dir / "sizes.json", document))
    return written


def write_grid(result: GridResult, out_dir: Path, config: Optional[Dict[str, Any]] = None) -> List[Path]:
    out_dir = Path(out_dir)
    csv_rows = (
        [point.stage, json.dumps(point.params, sort_keys=True), "" if point.score is None else point.score]
        for point in result.points
    )
    written = [atomic_write_csv(out_dir / "grid.csv", ["stage", "params", "score"], csv_rows)]
    document = {
        "format_version": FORMAT_VERSION,
        "best": result.best.model_dump(by_alias=True),
        "best_score": result.best_score,
        "points": [point.model_dump(mode="json") for point in result.points],
        "config": config or {},
    }
    written.append(_write_json(out_dir / "grid.json", document))
    return written
