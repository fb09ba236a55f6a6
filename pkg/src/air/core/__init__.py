"""Domain types, manifest persistence, and deterministic dataset splitting."""

from air.core.manifest import load_manifest, save_manifest
from air.core.splits import kfold_split, split_dataset
from air.core.types import (
    Context,
    ContextCombination,
    ContextGrammar,
    DatasetManifest,
    ImageRecord,
    PromptRecord,
    PromptSource,
    FilterVerdict,
    Stage,
    validate_embedding,
)

__all__ = [
    "Context",
    "ContextCombination",
    "ContextGrammar",
    "DatasetManifest",
    "ImageRecord",
    "PromptRecord",
    "PromptSource",
    "FilterVerdict",
    "Stage",
    "validate_embedding",
    "save_manifest",
    "load_manifest",
    "split_dataset",
    "kfold_split",
]
