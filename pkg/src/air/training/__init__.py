"""Linear softmax probe: training, metrics, cross-validation, dataset merging."""

from air.training.crossval import CrossValidationResult, cross_validate, merge_for_training
from air.training.metrics import MetricsReport, confusion_metrics, evaluate, format_percent
from air.training.probe import (
    ModelArtifact,
    TrainConfig,
    load_model,
    predict,
    save_model,
    softmax_gradients,
    train_probe,
)

__all__ = [
    "TrainConfig",
    "ModelArtifact",
    "train_probe",
    "predict",
    "save_model",
    "load_model",
    "softmax_gradients",
    "MetricsReport",
    "evaluate",
    "confusion_metrics",
    "format_percent",
    "cross_validate",
    "CrossValidationResult",
    "merge_for_training",
]
