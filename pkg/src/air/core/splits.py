"""Deterministic stratified train/validation and k-fold splitting.

Only images with a `kept` verdict participate. Splits are stratified per
class: the train count per class is round-half-up(fraction * class size),
so small classes never starve. A fixed seed fully determines the outcome.
"""

from __future__ import annotations

import hashlib

import numpy as np

from air.core.types import DatasetManifest
from air.errors import InsufficientDataError, ValidationError


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def _class_rng(seed: int, class_label: str) -> np.random.Generator:
    digest = hashlib.sha256(f"{seed}:{class_label}".encode("utf-8")).digest()
    return np.random.default_rng(int.from_bytes(digest[:8], "little"))


def _kept_ids_by_class(manifest: DatasetManifest) -> dict[str, list[str]]:
    grouped: dict[str, list[str]] = {c: [] for c in manifest.classes}
    for image in manifest.kept_images():
        grouped[image.class_label].append(image.id)
    # Sort before shuffling so record order in the manifest cannot leak in.
    return {c: sorted(ids) for c, ids in grouped.items()}


def split_dataset(
    manifest: DatasetManifest, train_fraction: float, seed: int
) -> tuple[list[str], list[str]]:
    """Stratified (train ids, validation ids) partition of the kept images."""
    if not (0.0 < train_fraction < 1.0):
        raise ValidationError(f"train_fraction must be in (0, 1), got {train_fraction}")
    train: list[str] = []
    val: list[str] = []
    for class_label, ids in _kept_ids_by_class(manifest).items():
        if len(ids) < 2:
            raise InsufficientDataError(
                f"class {class_label!r} has {len(ids)} kept images; need at least 2"
            )
        shuffled = list(ids)
        _class_rng(seed, class_label).shuffle(shuffled)
        n_train = min(_round_half_up(train_fraction * len(shuffled)), len(shuffled))
        train.extend(shuffled[:n_train])
        val.extend(shuffled[n_train:])
    return train, val


def kfold_split(
    manifest: DatasetManifest, k: int, seed: int
) -> list[tuple[list[str], list[str]]]:
    """k stratified (train ids, validation ids) folds partitioning the kept images.

    Validation folds are disjoint, cover every kept image, and per-class fold
    sizes differ by at most one.
    """
    if k < 2:
        raise ValidationError(f"k must be at least 2, got {k}")
    fold_val: list[list[str]] = [[] for _ in range(k)]
    for class_label, ids in _kept_ids_by_class(manifest).items():
        if len(ids) < k:
            raise InsufficientDataError(
                f"class {class_label!r} has {len(ids)} kept images; need at least k={k}"
            )
        shuffled = list(ids)
        _class_rng(seed, class_label).shuffle(shuffled)
        for position, image_id in enumerate(shuffled):
            fold_val[position % k].append(image_id)
    folds: list[tuple[list[str], list[str]]] = []
    for i in range(k):
        val_set = set(fold_val[i])
        train = [img_id for j in range(k) if j != i for img_id in fold_val[j]]
        folds.append((train, list(fold_val[i])))
        assert len(val_set) == len(fold_val[i])
    return folds
