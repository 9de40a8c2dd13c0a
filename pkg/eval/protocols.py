"""Experiment protocols: label-noise sweeps, latent-vs-raw comparisons, size sweeps, grid search."""

from __future__ import annotations

import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, Iterable, List, Literal, Optional, Sequence, Tuple, TypeVar

import numpy as np
from pydantic import BaseModel

from data.models import DatasetError, MultiViewDataset
from data.noise import inject_label_noise, subsample_dataset
from eval.learners import kmeans, predict_labels, softmax_classifier
from eval.metrics import CLASSIFICATION_METRICS, CLUSTERING_METRICS, classification_metrics, clustering_metrics
from model.base import Algorithm, Hyperparams, SolverError
from model.trainer import TrainReport, fit

logger = logging.getLogger("mtmvcsf.protocols")

EvalMode = Literal["classify", "cluster"]
T = TypeVar("T")


def _run_cells(cells: Sequence[Callable[[], T]], workers: int) -> List[T]:
    """Evaluate independent cells, returning results in submission order."""
    if workers <= 1:
        return [cell() for cell in cells]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda cell: cell(), cells))


def _mean_std(values: Sequence[float]) -> Tuple[float, float]:
    array = np.asarray(values, dtype=np.float64)
    return float(array.mean()), float(array.std())


def require_truth(ds: MultiViewDataset) -> None:
    if not ds.has_truth:
        raise DatasetError(f"dataset {ds.name!r} carries no ground-truth labels for unlabeled instances")


def unlabeled_accuracy(report: TrainReport, ds: MultiViewDataset) -> List[float]:
    """Per-task accuracy of W_t^T F_u against the clean labels; W_d is not used."""
    accuracies: List[float] = []
    for t, features in enumerate(report.features):
        predicted = predict_labels(report.weights[t], features.unlabeled)
        accuracies.append(float(np.mean(predicted == ds.unlabeled_truth(t))))
    return accuracies


class SweepCell(BaseModel):
    algorithm: Algorithm
    fraction: float
    seed: int
    accuracy: float
    task_accuracy: List[float]
    iterations: int
    converged: bool


class SweepSummary(BaseModel):
    algorithm: Algorithm
    fraction: float
    mean_accuracy: float
    std_accuracy: float
    n_seeds: int


class SweepTable(BaseModel):
    cells: List[SweepCell]
    summary: List[SweepSummary]


def noise_sweep(
    ds: MultiViewDataset,
    hp_std: Hyperparams,
    hp_an: Hyperparams,
    fractions: Sequence[float],
    seeds: Sequence[int],
    workers: int = 1,
) -> SweepTable:
    """Fit both algorithms on noisy copies of ``ds`` and score them on clean unlabeled labels."""
    require_truth(ds)
    for fraction in fractions:
        if not 0.0 <= fraction <= 0.5:
            raise ValueError(f"noise fraction must lie in [0, 0.5], got {fraction}")

    plan = [
        (algorithm, hp, fraction, seed)
        for fraction in fractions
        for algorithm, hp in ((Algorithm.STANDARD, hp_std), (Algorithm.ANTI_NOISE, hp_an))
        for seed in seeds
    ]

    def make_cell(algorithm: Algorithm, hp: Hyperparams, fraction: float, seed: int) -> Callable[[], SweepCell]:
        def run() -> SweepCell:
            noisy = inject_label_noise(ds, fraction, seed)
            report = fit(noisy, hp.model_copy(update={"seed": seed}), algorithm)
            accuracies = unlabeled_accuracy(report, ds)
            logger.info("%s fraction=%.2f seed=%d accuracy=%.4f", algorithm.value, fraction, seed, np.mean(accuracies))
            return SweepCell(
                algorithm=algorithm,
                fraction=fraction,
                seed=seed,
                accuracy=float(np.mean(accuracies)),
                task_accuracy=accuracies,
                iterations=report.iterations,
                converged=report.converged,
            )

        return run

    cells = _run_cells([make_cell(*item) for item in plan], workers)
    summary: List[SweepSummary] = []
    for fraction in fractions:
        for algorithm in (Algorithm.STANDARD, Algorithm.ANTI_NOISE):
            scores = [c.accuracy for c in cells if c.algorithm == algorithm and c.fraction == fraction]
            mean, std = _mean_std(scores)
            summary.append(
                SweepSummary(
                    algorithm=algorithm,
                    fraction=fraction,
                    mean_accuracy=mean,
                    std_accuracy=std,
                    n_seeds=len(scores),
                )
            )
    return SweepTable(cells=cells, summary=summary)


class ComparisonRow(BaseModel):
    arm: Literal["latent", "raw"]
    task: str
    metric: str
    value: float


class ComparisonTable(BaseModel):
    mode: EvalMode
    seed: int
    rows: List[ComparisonRow]

    def value(self, arm: str, task: str, metric: str) -> float:
        for row in self.rows:
            if (row.arm, row.task, row.metric) == (arm, task, metric):
                return row.value
        raise KeyError((arm, task, metric))


def _split_halves(n: int, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    order = np.random.default_rng(seed).permutation(n)
    half = n // 2
    return np.sort(order[:half]), np.sort(order[half:])


def _score_arm(features_u: np.ndarray, truth: np.ndarray, n_classes: int, mode: EvalMode, seed: int) -> Dict[str, float]:
    if mode == "cluster":
        assigned = kmeans(features_u, n_classes, seed)
        return clustering_metrics(truth, assigned).values()
    train, test = _split_halves(features_u.shape[1], seed)
    predicted = softmax_classifier(features_u[:, train], truth[train], features_u[:, test], n_classes, seed=seed)
    return classification_metrics(truth[test], predicted, n_classes).values()


def latent_vs_raw(
    ds: MultiViewDataset,
    hp: Hyperparams,
    mode: EvalMode,
    seed: int,
    algorithm: Algorithm = Algorithm.STANDARD,
) -> ComparisonTable:
    """Score the unlabeled latent features against the stacked input views with the same learner.

    The raw arm sees the views as given, before any column normalization the fit applies.
    """
    if mode not in ("classify", "cluster"):
        raise ValueError(f"unknown evaluation mode {mode!r}")
    require_truth(ds)
    if ds.n_unlabeled < 2:
        raise DatasetError("latent-vs-raw evaluation needs at least two unlabeled instances")
    report = fit(ds, hp.model_copy(update={"seed": seed}), algorithm)
    metrics = CLUSTERING_METRICS if mode == "cluster" else CLASSIFICATION_METRICS

    per_arm: Dict[str, List[Dict[str, float]]] = {"latent": [], "raw": []}
    rows: List[ComparisonRow] = []
    for t, features in enumerate(report.features):
        truth = ds.unlabeled_truth(t)
        arms = {"latent": features.unlabeled, "raw": ds.stack_views(t, "unlabeled")}
        for arm, values in arms.items():
            scores = _score_arm(values, truth, ds.n_classes, mode, seed)
            per_arm[arm].append(scores)
            rows.extend(ComparisonRow(arm=arm, task=str(t), metric=m, value=scores[m]) for m in metrics)
    for arm, scores in per_arm.items():
        rows.extend(
            ComparisonRow(arm=arm, task="mean", metric=m, value=float(np.mean([s[m] for s in scores])))
            for m in metrics
        )
    return ComparisonTable(mode=mode, seed=seed, rows=rows)


class SummaryRow(BaseModel):
    arm: str
    task: str
    metric: str
    mean: float
    std: float
    n: int


def summarize_comparisons(tables: Iterable[ComparisonTable]) -> List[SummaryRow]:
    """Mean and standard deviation of every (arm, task, metric) across tables."""
    grouped: Dict[Tuple[str, str, str], List[float]] = {}
    for table in tables:
        for row in table.rows:
            grouped.setdefault((row.arm, row.task, row.metric), []).append(row.value)
    summary: List[SummaryRow] = []
    for (arm, task, metric), values in grouped.items():
        mean, std = _mean_std(values)
        summary.append(SummaryRow(arm=arm, task=task, metric=metric, mean=mean, std=std, n=len(values)))
    return summary


class SizeRow(BaseModel):
    size: int
    mean_nmi: float
    std_nmi: float
    n_seeds: int


def training_size_sweep(
    ds: MultiViewDataset,
    hp: Hyperparams,
    sizes: Sequence[int],
    seeds: Sequence[int],
    algorithm: Algorithm = Algorithm.STANDARD,
    workers: int = 1,
) -> List[SizeRow]:
    """k-means NMI on unlabeled latent features as the number of instances per task grows."""
    require_truth(ds)

    def make_cell(size: int, seed: int) -> Callable[[], float]:
        def run() -> float:
            subset = subsample_dataset(ds, size, seed)
            report = fit(subset, hp.model_copy(update={"seed": seed}), algorithm)
            scores = [
                clustering_metrics(subset.unlabeled_truth(t), kmeans(features.unlabeled, ds.n_classes, seed)).nmi
                for t, features in enumerate(report.features)
            ]
            return float(np.mean(scores))

        return run

    plan = [(size, seed) for size in sizes for seed in seeds]
    results = _run_cells([make_cell(size, seed) for size, seed in plan], workers)
    rows: List[SizeRow] = []
    for size in sizes:
        values = [score for (s, _), score in zip(plan, results) if s == size]
        mean, std = _mean_std(values)
        rows.append(SizeRow(size=size, mean_nmi=mean, std_nmi=std, n_seeds=len(values)))
    return rows


class GridPoint(BaseModel):
    stage: int
    params: Dict[str, float]
    score: Optional[float]


class GridResult(BaseModel):
    best: Hyperparams
    best_score: float
    points: List[GridPoint]


def _grid(axes: Dict[str, Sequence[float]]) -> List[Dict[str, float]]:
    names = sorted(axes)
    return [dict(zip(names, combo)) for combo in itertools.product(*(axes[name] for name in names))]


def segmented_grid_search(
    ds: MultiViewDataset,
    base_hp: Hyperparams,
    algorithm: Algorithm,
    model_grid: Dict[str, Sequence[float]],
    dim_grid: Dict[str, Sequence[float]],
    seed: int = 0,
    workers: int = 1,
) -> GridResult:
    """Search model weights with the dimensions fixed, then dimensions with the best weights.

    Scores are mean unlabeled accuracy against the clean labels; settings that
    fail to fit are recorded with no score.
    """
    require_truth(ds)
    allowed_model = {"beta", "gamma", "mu", "lam"}
    allowed_dims = {"k_per_view", "kc_per"}
    if not set(model_grid) <= allowed_model or not set(dim_grid) <= allowed_dims:
        msg = f"model grid keys must be in {sorted(allowed_model)}, dimension keys in {sorted(allowed_dims)}"
        raise ValueError(msg)

    def score(params: Dict[str, float], base: Hyperparams) -> Callable[[], Optional[float]]:
        def run() -> Optional[float]:
            try:
                hp = Hyperparams.model_validate({**base.model_dump(), **params, "seed": seed})
                report = fit(ds, hp, algorithm)
            except (SolverError, ValueError) as exc:
                logger.warning("grid point %s failed: %s", params, exc)
                return None
            return float(np.mean(unlabeled_accuracy(report, ds)))

        return run

    points: List[GridPoint] = []
    best_hp, best_score = base_hp, -np.inf
    for stage, axes in ((1, model_grid), (2, dim_grid)):
        candidates = _grid(axes) if axes else []
        stage_base = best_hp
        results = _run_cells([score(params, stage_base) for params in candidates], workers)
        for params, value in zip(candidates, results):
            points.append(GridPoint(stage=stage, params=params, score=value))
            if value is not None and value > best_score:
                best_score = value
                best_hp = Hyperparams.model_validate({**stage_base.model_dump(), **params})
    if not np.isfinite(best_score):
        raise SolverError("no grid point could be fitted")
    return GridResult(best=best_hp, best_score=best_score, points=points)
