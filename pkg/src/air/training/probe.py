"""Softmax probe trained with mini-batch gradient descent.

The probe is a single linear layer over embedding vectors, optimized with
either plain SGD or AdamW (decoupled weight decay) on categorical
cross-entropy. Weights start at zero: the problem is convex, so the only
randomness is the seed-derived shuffle order, which makes training fully
deterministic for a given config.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Protocol, Sequence, runtime_checkable

import numpy as np

from air.core.canonical import write_canonical_json
from air.errors import DivergenceError, PersistenceError, SchemaError, ValidationError


class Optimizer(str, Enum):
    SGD = "sgd"
    ADAMW = "adamw"


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 64
    epochs: int = 25
    optimizer: Optimizer = Optimizer.ADAMW
    weight_decay: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    train_fraction: float = 0.8

    def __post_init__(self) -> None:
        object.__setattr__(self, "optimizer", Optimizer(self.optimizer))
        if self.learning_rate <= 0:
            raise ValidationError("learning_rate must be positive")
        if self.batch_size < 1:
            raise ValidationError("batch_size must be positive")
        if self.epochs < 0:
            raise ValidationError("epochs must be non-negative")
        if not (0.0 < self.train_fraction < 1.0):
            raise ValidationError("train_fraction must be in (0, 1)")

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "learning_rate": self.learning_rate,
            "batch_size": self.batch_size,
            "epochs": self.epochs,
            "optimizer": self.optimizer.value,
            "weight_decay": self.weight_decay,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "eps": self.eps,
            "seed": self.seed,
            "train_fraction": self.train_fraction,
        }

    @classmethod
    def from_json_dict(cls, raw: dict[str, Any]) -> "TrainConfig":
        known = {f: raw[f] for f in cls.__dataclass_fields__ if f in raw}
        return cls(**known)


@dataclass(frozen=True, eq=False)
class ModelArtifact:
    weights: np.ndarray  # [num_classes, dim]
    bias: np.ndarray  # [num_classes]
    class_names: tuple[str, ...]
    train_config: TrainConfig
    training_curve: tuple[tuple[float, float, float | None], ...] = ()

    def __post_init__(self) -> None:
        if len(set(self.class_names)) != len(self.class_names):
            raise ValidationError("class_names must be distinct")
        if not np.all(np.isfinite(self.weights)) or not np.all(np.isfinite(self.bias)):
            raise ValidationError("model weights must be finite")
        if self.weights.shape[0] != len(self.class_names) or self.bias.shape != (
            self.weights.shape[0],
        ):
            raise ValidationError("weights/bias shapes do not match class_names")

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "air_model_schema": 1,
            "class_names": list(self.class_names),
            "weights": [[float(w) for w in row] for row in self.weights],
            "bias": [float(b) for b in self.bias],
            "train_config": self.train_config.to_json_dict(),
            "training_curve": [
                [loss, acc, val] for loss, acc, val in self.training_curve
            ],
        }


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def softmax_gradients(
    weights: np.ndarray,
    bias: np.ndarray,
    features: np.ndarray,
    labels: np.ndarray,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean cross-entropy loss and its analytic gradients."""
    n = features.shape[0]
    probs = softmax(features @ weights.T + bias)
    loss = float(-np.mean(np.log(probs[np.arange(n), labels] + 1e-300)))
    dlogits = probs.copy()
    dlogits[np.arange(n), labels] -= 1.0
    dlogits /= n
    return loss, dlogits.T @ features, dlogits.sum(axis=0)


ProgressFn = Callable[[dict[str, Any]], None]


@runtime_checkable
class TrainerBackend(Protocol):
    """Extension point for externally served trainers (deep backbones).

    Implementations must be deterministic for a fixed config and emit the
    same per-epoch progress events as the built-in probe, so the monitoring
    surface does not change when a real training service is plugged in.
    """

    def train(
        self,
        features: np.ndarray,
        labels: Sequence[int],
        config: "TrainConfig",
        class_names: Sequence[str] | None = None,
        progress: ProgressFn | None = None,
        val_features: np.ndarray | None = None,
        val_labels: Sequence[int] | None = None,
    ) -> "ModelArtifact": ...


class ProbeTrainer:
    """The built-in trainer behind the TrainerBackend interface."""

    def train(
        self,
        features: np.ndarray,
        labels: Sequence[int],
        config: "TrainConfig",
        class_names: Sequence[str] | None = None,
        progress: ProgressFn | None = None,
        val_features: np.ndarray | None = None,
        val_labels: Sequence[int] | None = None,
    ) -> "ModelArtifact":
        return train_probe(
            features,
            labels,
            config,
            class_names=class_names,
            progress=progress,
            val_features=val_features,
            val_labels=val_labels,
        )


def train_probe(
    features: np.ndarray,
    labels: Sequence[int],
    config: TrainConfig,
    class_names: Sequence[str] | None = None,
    progress: ProgressFn | None = None,
    val_features: np.ndarray | None = None,
    val_labels: Sequence[int] | None = None,
) -> ModelArtifact:
    """Fit the probe; deterministic for fixed (features, labels, config)."""
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if features.ndim != 2 or features.shape[0] != labels.shape[0]:
        raise ValidationError("features and labels must align")
    if class_names is None:
        class_names = tuple(str(c) for c in range(int(labels.max()) + 1 if len(labels) else 2))
    num_classes = len(class_names)
    if num_classes < 2:
        raise ValidationError("at least two classes are required")
    if len(labels) < num_classes:
        raise ValidationError("fewer samples than classes")
    if labels.min() < 0 or labels.max() >= num_classes:
        raise ValidationError("label outside [0, num_classes)")
    if len(set(labels.tolist())) < 2:
        raise ValidationError("training data must contain at least two distinct classes")

    dim = features.shape[1]
    weights = np.zeros((num_classes, dim))
    bias = np.zeros(num_classes)
    m_w = np.zeros_like(weights)
    v_w = np.zeros_like(weights)
    m_b = np.zeros_like(bias)
    v_b = np.zeros_like(bias)
    step = 0
    rng = np.random.default_rng(config.seed)
    curve: list[tuple[float, float, float | None]] = []

    for epoch in range(config.epochs):
        order = rng.permutation(len(labels))
        for start in range(0, len(labels), config.batch_size):
            batch = order[start : start + config.batch_size]
            loss, grad_w, grad_b = softmax_gradients(
                weights, bias, features[batch], labels[batch]
            )
            if not np.isfinite(loss):
                raise DivergenceError("training loss became non-finite", epoch=epoch)
            if config.optimizer is Optimizer.SGD:
                weights -= config.learning_rate * grad_w
                bias -= config.learning_rate * grad_b
            else:
                step += 1
                m_w = config.beta1 * m_w + (1 - config.beta1) * grad_w
                v_w = config.beta2 * v_w + (1 - config.beta2) * grad_w**2
                m_b = config.beta1 * m_b + (1 - config.beta1) * grad_b
                v_b = config.beta2 * v_b + (1 - config.beta2) * grad_b**2
                corr1 = 1 - config.beta1**step
                corr2 = 1 - config.beta2**step
                weights -= config.learning_rate * (
                    (m_w / corr1) / (np.sqrt(v_w / corr2) + config.eps)
                    + config.weight_decay * weights
                )
                bias -= config.learning_rate * (m_b / corr1) / (np.sqrt(v_b / corr2) + config.eps)

        epoch_loss, _, _ = softmax_gradients(weights, bias, features, labels)
        train_acc = float(
            np.mean(np.argmax(features @ weights.T + bias, axis=1) == labels)
        )
        val_acc: float | None = None
        if val_features is not None and val_labels is not None and len(val_labels):
            val_pred = np.argmax(np.asarray(val_features) @ weights.T + bias, axis=1)
            val_acc = float(np.mean(val_pred == np.asarray(val_labels)))
        curve.append((epoch_loss, train_acc, val_acc))
        if progress is not None:
            progress(
                {
                    "epoch": epoch + 1,
                    "epochs": config.epochs,
                    "train_loss": epoch_loss,
                    "train_accuracy": train_acc,
                    "val_accuracy": val_acc,
                }
            )

    return ModelArtifact(
        weights=weights,
        bias=bias,
        class_names=tuple(class_names),
        train_config=config,
        training_curve=tuple(curve),
    )


def predict(model: ModelArtifact, features: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(probabilities [m, classes], argmax labels [m]); ties go to the smaller index."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim == 1:
        features = features.reshape(1, -1)
    if features.shape[1] != model.weights.shape[1]:
        raise ValidationError(
            f"feature dim {features.shape[1]} does not match model dim {model.weights.shape[1]}"
        )
    probs = softmax(features @ model.weights.T + model.bias)
    return probs, np.argmax(probs, axis=1)


def save_model(model: ModelArtifact, directory: Path | str) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_canonical_json(directory / "model.json", model.to_json_dict())


def load_model(directory: Path | str) -> ModelArtifact:
    import json

    path = Path(directory) / "model.json"
    try:
        raw = json.loads(path.read_text("utf-8"))
    except OSError as exc:
        raise PersistenceError(f"cannot read model: {exc}", str(path)) from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(f"model file is not valid JSON: {exc}") from exc
    if raw.get("air_model_schema") != 1:
        raise SchemaError(f"unsupported model schema in {path}")
    curve = tuple(
        (float(l), float(a), None if v is None else float(v))
        for l, a, v in raw.get("training_curve", [])
    )
    return ModelArtifact(
        weights=np.asarray(raw["weights"], dtype=np.float64),
        bias=np.asarray(raw["bias"], dtype=np.float64),
        class_names=tuple(str(c) for c in raw["class_names"]),
        train_config=TrainConfig.from_json_dict(raw.get("train_config", {})),
        training_curve=curve,
    )
