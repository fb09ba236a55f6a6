"""k-fold cross-validation over a manifest and original+augmented merging."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Any, Callable, Sequence

import numpy as np

from air.core.splits import kfold_split
from air.core.types import DatasetManifest, ImageRecord
from air.errors import ValidationError
from air.training.metrics import MetricsReport, evaluate
from air.training.probe import ModelArtifact, TrainConfig, train_probe

MERGE_FRACTIONS = (0.0, 0.1, 0.2, 0.5, 1.0)


def features_and_labels(
    manifest: DatasetManifest, ids: Sequence[str] | None = None
) -> tuple[np.ndarray, np.ndarray, tuple[str, ...]]:
    """Feature matrix and integer labels for the kept images (or a subset)."""
    class_index = {c: i for i, c in enumerate(manifest.classes)}
    records = manifest.kept_images()
    if ids is not None:
        wanted = set(ids)
        records = tuple(r for r in records if r.id in wanted)
    features = np.asarray([r.embedding for r in records], dtype=np.float64)
    labels = np.asarray([class_index[r.class_label] for r in records], dtype=np.int64)
    return features, labels, manifest.classes


@dataclass(frozen=True)
class CrossValidationResult:
    folds: tuple[MetricsReport, ...]
    mean: dict[str, float]
    models: tuple[ModelArtifact, ...] = ()

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "folds": [f.to_json_dict() for f in self.folds],
            "mean": dict(self.mean),
        }


def cross_validate(
    manifest: DatasetManifest,
    k: int,
    config: TrainConfig,
    progress: Callable[[dict[str, Any]], None] | None = None,
) -> CrossValidationResult:
    """One train/evaluate cycle per fold; the mean report averages each scalar metric.

    The mean carries no confusion matrix: folds may differ in size, so pooled
    counts would not reproduce the averaged scalars.
    """
    folds = kfold_split(manifest, k, config.seed)
    reports: list[MetricsReport] = []
    models: list[ModelArtifact] = []
    for fold_index, (train_ids, val_ids) in enumerate(folds):
        train_x, train_y, class_names = features_and_labels(manifest, train_ids)
        val_x, val_y, _ = features_and_labels(manifest, val_ids)

        def fold_progress(event: dict[str, Any], _fold=fold_index) -> None:
            if progress is not None:
                progress({"fold": _fold, **event})

        model = train_probe(
            train_x,
            train_y,
            config,
            class_names=class_names,
            progress=fold_progress,
            val_features=val_x,
            val_labels=val_y,
        )
        models.append(model)
        reports.append(evaluate(model, val_x, val_y))
    mean = {
        name: float(np.mean([getattr(r, name) for r in reports]))
        for name in ("accuracy", "weighted_precision", "weighted_recall", "weighted_f1")
    }
    return CrossValidationResult(folds=tuple(reports), mean=mean, models=tuple(models))


def merge_for_training(
    original: DatasetManifest,
    augmented: DatasetManifest,
    fraction: float,
    seed: int,
) -> list[ImageRecord]:
    """All kept originals plus a stratified sample of the kept augmented images.

    Per class the sample size is floor(fraction * kept augmented count); the
    fraction must be one of the supported steps.
    """
    if not any(abs(fraction - f) < 1e-12 for f in MERGE_FRACTIONS):
        raise ValidationError(f"fraction must be one of {MERGE_FRACTIONS}, got {fraction}")
    if set(original.classes) != set(augmented.classes):
        offending = sorted(set(original.classes) ^ set(augmented.classes))
        raise ValidationError(f"label sets differ; offending classes: {offending}")

    combined = list(original.kept_images())
    if fraction == 0.0:
        return combined
    by_class: dict[str, list[ImageRecord]] = {c: [] for c in augmented.classes}
    for record in augmented.kept_images():
        by_class[record.class_label].append(record)
    for class_label in sorted(by_class):
        pool = sorted(by_class[class_label], key=lambda r: r.id)
        take = int(np.floor(fraction * len(pool)))
        if take == 0:
            continue
        digest = hashlib.sha256(f"merge:{seed}:{class_label}".encode("utf-8")).digest()
        rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
        picked = rng.permutation(len(pool))[:take]
        combined.extend(pool[i] for i in sorted(picked))
    return combined
