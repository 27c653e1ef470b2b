"""Confusion matrices and precision/recall/F1 with macro and weighted averages."""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ConfusionMatrix:
    """counts[true_class][predicted_class], non-negative integers."""

    counts: np.ndarray

    @property
    def n_classes(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class ClassificationMetrics:
    precision: np.ndarray  # per class
    recall: np.ndarray
    f1: np.ndarray
    macro_precision: float
    macro_recall: float
    macro_f1: float
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float
    degenerate_classes: int  # classes where a 0/0 was mapped to 0


def confusion(preds: np.ndarray, labels: np.ndarray, n_classes: int) -> ConfusionMatrix:
    """Tally counts[true][pred] over paired prediction/label vectors."""
    preds = np.asarray(preds, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    if preds.shape != labels.shape:
        raise ValueError(f"length mismatch: {preds.shape} vs {labels.shape}")
    if len(preds) and (
        preds.min() < 0 or preds.max() >= n_classes
        or labels.min() < 0 or labels.max() >= n_classes
    ):
        raise ValueError(f"labels outside [0, {n_classes})")
    counts = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(counts, (labels, preds), 1)
    return ConfusionMatrix(counts)


def precision_recall_f1(cm: ConfusionMatrix) -> ClassificationMetrics:
    """Per-class and averaged metrics; any 0/0 ratio is defined as 0."""
    counts = cm.counts.astype(np.float64)
    tp = np.diag(counts)
    predicted = counts.sum(axis=0)
    actual = counts.sum(axis=1)

    with np.errstate(invalid="ignore", divide="ignore"):
        precision = np.where(predicted > 0, tp / predicted, 0.0)
        recall = np.where(actual > 0, tp / actual, 0.0)
        pr = precision + recall
        f1 = np.where(pr > 0, 2.0 * precision * recall / np.where(pr > 0, pr, 1.0), 0.0)

    degenerate = int(np.sum((predicted == 0) | (actual == 0) | (pr == 0)))
    total = actual.sum()
    weights = actual / total if total > 0 else np.zeros_like(actual)
    return ClassificationMetrics(
        precision=precision,
        recall=recall,
        f1=f1,
        macro_precision=float(precision.mean()),
        macro_recall=float(recall.mean()),
        macro_f1=float(f1.mean()),
        weighted_precision=float(precision @ weights),
        weighted_recall=float(recall @ weights),
        weighted_f1=float(f1 @ weights),
        degenerate_classes=degenerate,
    )


def metrics_from_predictions(
    preds: np.ndarray, labels: np.ndarray, n_classes: int
) -> ClassificationMetrics:
    return precision_recall_f1(confusion(preds, labels, n_classes))
