"""Classification and clustering metrics for predictions on unlabeled instances."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np
from pydantic import BaseModel, model_validator
from sklearn import metrics as skm

CLASSIFICATION_METRICS = ("accuracy", "macro_precision", "macro_f1", "macro_dice", "sample_jaccard")
CLUSTERING_METRICS = ("nmi", "ari", "homogeneity", "completeness")

# recorded in exported tables
NMI_NORMALIZATION = "arithmetic"


@dataclass(frozen=True, eq=False)
class ConfusionCounts:
    """C x C counts; rows are true classes, columns predicted classes."""

    matrix: np.ndarray

    @property
    def total(self) -> int:
        return int(self.matrix.sum())

    @property
    def true_positives(self) -> np.ndarray:
        return np.diag(self.matrix)

    @property
    def false_positives(self) -> np.ndarray:
        return self.matrix.sum(axis=0) - self.true_positives

    @property
    def false_negatives(self) -> np.ndarray:
        return self.matrix.sum(axis=1) - self.true_positives


class MetricBundle(BaseModel):
    """Scores of one evaluation; fields of the other metric family stay unset."""

    accuracy: Optional[float] = None
    macro_precision: Optional[float] = None
    macro_f1: Optional[float] = None
    macro_dice: Optional[float] = None
    sample_jaccard: Optional[float] = None
    nmi: Optional[float] = None
    ari: Optional[float] = None
    homogeneity: Optional[float] = None
    completeness: Optional[float] = None

    @model_validator(mode="after")
    def check_ranges(self) -> "MetricBundle":
        tol = 1e-12
        for name, value in self.values().items():
            low = -1.0 if name == "ari" else 0.0
            if not low - tol <= value <= 1.0 + tol:
                raise ValueError(f"{name}={value} outside [{low}, 1]")
        return self

    def values(self) -> Dict[str, float]:
        """The metrics that were computed, in declaration order."""
        return {name: value for name, value in self.model_dump().items() if value is not None}


def _validate_pair(true: np.ndarray, other: np.ndarray) -> None:
    if true.ndim != 1 or other.ndim != 1:
        raise ValueError("label vectors must be one-dimensional")
    if true.size != other.size:
        raise ValueError(f"label vectors differ in length: {true.size} vs {other.size}")
    if true.size == 0:
        raise ValueError("cannot score an empty label vector")


def confusion_counts(true: np.ndarray, pred: np.ndarray, n_classes: int) -> ConfusionCounts:
    true = np.asarray(true, dtype=np.int64)
    pred = np.asarray(pred, dtype=np.int64)
    _validate_pair(true, pred)
    for name, values in (("true", true), ("predicted", pred)):
        if values.min() < 0 or values.max() >= n_classes:
            raise ValueError(f"{name} label out of range [0, {n_classes})")
    matrix = skm.confusion_matrix(true, pred, labels=np.arange(n_classes))
    return ConfusionCounts(matrix)


def classification_metrics(true: np.ndarray, pred: np.ndarray, n_classes: int) -> MetricBundle:
    """Accuracy, macro precision/F1/Dice (0/0 counted as 0), and sample Jaccard."""
    counts = confusion_counts(true, pred, n_classes)
    labels = np.arange(n_classes)
    true = np.asarray(true, dtype=np.int64)
    pred = np.asarray(pred, dtype=np.int64)

    accuracy = float(np.trace(counts.matrix) / counts.total)
    precision = skm.precision_score(true, pred, labels=labels, average="macro", zero_division=0)
    f1 = skm.f1_score(true, pred, labels=labels, average="macro", zero_division=0)

    tp, fp, fn = counts.true_positives, counts.false_positives, counts.false_negatives
    denominator = 2 * tp + fp + fn
    dice = np.divide(2 * tp, denominator, out=np.zeros(n_classes), where=denominator > 0)
    return MetricBundle(
        accuracy=accuracy,
        macro_precision=float(precision),
        macro_f1=float(f1),
        macro_dice=float(dice.mean()),
        # one label per sample: |{y} & {y_hat}| / |{y} | {y_hat}| is 1 or 0
        sample_jaccard=accuracy,
    )


def clustering_metrics(true: np.ndarray, assigned: np.ndarray) -> MetricBundle:
    """NMI (arithmetic mean normalization), ARI, homogeneity, and completeness."""
    true = np.asarray(true, dtype=np.int64)
    assigned = np.asarray(assigned, dtype=np.int64)
    _validate_pair(true, assigned)
    homogeneity, completeness, _ = skm.homogeneity_completeness_v_measure(true, assigned)
    return MetricBundle(
        nmi=float(skm.normalized_mutual_info_score(true, assigned, average_method=NMI_NORMALIZATION)),
        ari=float(skm.adjusted_rand_score(true, assigned)),
        homogeneity=float(homogeneity),
        completeness=float(completeness),
    )
