"""Evaluation metrics: confusion matrix plus support-weighted precision/recall/F1."""

from __future__ import annotations

from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Any, Sequence

import numpy as np

from air.errors import ValidationError
from air.training.probe import ModelArtifact, predict


@dataclass(frozen=True, eq=False)
class MetricsReport:
    accuracy: float
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float
    confusion: np.ndarray  # rows = true class, columns = predicted class

    def __post_init__(self) -> None:
        total = self.confusion.sum()
        if total <= 0:
            raise ValidationError("confusion matrix must contain samples")
        trace = float(np.trace(self.confusion))
        if abs(self.accuracy - trace / total) > 1e-9:
            raise ValidationError("accuracy must equal trace/sum of the confusion matrix")

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "accuracy": self.accuracy,
            "weighted_precision": self.weighted_precision,
            "weighted_recall": self.weighted_recall,
            "weighted_f1": self.weighted_f1,
            "confusion": [[int(x) for x in row] for row in self.confusion],
        }

    def as_percent_row(self) -> dict[str, str]:
        return {
            "accuracy": format_percent(self.accuracy),
            "precision": format_percent(self.weighted_precision),
            "recall": format_percent(self.weighted_recall),
            "f1": format_percent(self.weighted_f1),
        }


def format_percent(fraction: float) -> str:
    """Render a [0, 1] fraction as a percentage with 2 decimals, half-up.

    Quantizes the shortest decimal form of the value so boundary cases like
    95.485 round up rather than disappearing into binary representation noise.
    """
    return str(Decimal(repr(fraction * 100)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


def confusion_metrics(confusion: np.ndarray) -> dict[str, float]:
    """Accuracy and support-weighted precision/recall/F1 from a confusion matrix.

    A class nobody was predicted into contributes precision 0 at its weight.
    """
    confusion = np.asarray(confusion, dtype=np.float64)
    total = confusion.sum()
    support = confusion.sum(axis=1)
    predicted = confusion.sum(axis=0)
    tp = np.diag(confusion)
    with np.errstate(divide="ignore", invalid="ignore"):
        precision = np.where(predicted > 0, tp / np.where(predicted > 0, predicted, 1), 0.0)
        recall = np.where(support > 0, tp / np.where(support > 0, support, 1), 0.0)
        denom = precision + recall
        f1 = np.where(denom > 0, 2 * precision * recall / np.where(denom > 0, denom, 1), 0.0)
    weights = support / total
    return {
        "accuracy": float(np.trace(confusion) / total),
        "weighted_precision": float(np.sum(weights * precision)),
        "weighted_recall": float(np.sum(weights * recall)),
        "weighted_f1": float(np.sum(weights * f1)),
    }


def report_from_confusion(confusion: np.ndarray) -> MetricsReport:
    metrics = confusion_metrics(confusion)
    return MetricsReport(confusion=np.asarray(confusion, dtype=np.int64), **metrics)


def evaluate(
    model: ModelArtifact, features: np.ndarray, labels: Sequence[int]
) -> MetricsReport:
    """Confusion matrix and weighted metrics of argmax predictions."""
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size < 1:
        raise ValidationError("evaluation needs at least one sample")
    num_classes = len(model.class_names)
    if labels.min() < 0 or labels.max() >= num_classes:
        raise ValidationError("label outside [0, num_classes)")
    _, predictions = predict(model, features)
    confusion = np.zeros((num_classes, num_classes), dtype=np.int64)
    for true, pred in zip(labels, predictions):
        confusion[true, pred] += 1
    return report_from_confusion(confusion)
