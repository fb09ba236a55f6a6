"""Shared test fixtures and builders."""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from air.core.types import (
    Context,
    ContextGrammar,
    DatasetManifest,
    FilterVerdict,
    ImageRecord,
    PromptRecord,
    PromptSource,
)


def forest_grammar() -> ContextGrammar:
    return ContextGrammar(
        contexts=(
            Context("category", ("small fire and smoke", "normal"), mandatory=True),
            Context("location", ("tropical forest", "boreal forest")),
            Context("view", ("drone's view",)),
            Context("time", ("morning",)),
        )
    )


@pytest.fixture
def grammar() -> ContextGrammar:
    return forest_grammar()


def make_manifest(
    ids_labels_vectors,
    classes=None,
    verdict=FilterVerdict.PENDING,
    dataset_id="ds-test",
) -> DatasetManifest:
    """Manifest from (id, label, vector) triples; one synthetic prompt per class."""
    triples = list(ids_labels_vectors)
    labels = sorted({label for _, label, _ in triples}) if classes is None else list(classes)
    prompts = tuple(
        PromptRecord(
            id=f"p-{label}",
            terms=((label, 1.0),),
            source=PromptSource.SIMPLISTIC,
            class_label=label,
        )
        for label in labels
    )
    images = tuple(
        ImageRecord(
            id=image_id,
            class_label=label,
            image_ref=f"blobs/{image_id}.png",
            embedding=tuple(float(x) for x in np.asarray(vec, dtype=np.float32)),
            prompt_id=f"p-{label}",
            seed=0,
            filter_verdict=verdict,
        )
        for image_id, label, vec in triples
    )
    return DatasetManifest(
        dataset_id=dataset_id,
        name="test dataset",
        classes=tuple(labels),
        prompts=prompts,
        images=images,
    )


def unit_rows(n: int, dim: int = 512, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    m = rng.standard_normal((n, dim))
    return m / np.linalg.norm(m, axis=1, keepdims=True)
