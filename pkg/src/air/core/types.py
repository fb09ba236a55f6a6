"""Domain types for grammars, prompts, images, and dataset manifests.

All types are immutable values: mutation means building a new instance
(`dataclasses.replace`). Validation runs at construction so an instance that
exists is an instance that holds its invariants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Iterable, Mapping, Sequence

from air.errors import ValidationError

EMBEDDING_DIM = 512
CATEGORY_CONTEXT = "category"

MAX_TERM_WEIGHT = 10.0


class PromptSource(str, Enum):
    ENGINEERED = "engineered"
    SIMPLISTIC = "simplistic"
    EXTRACTED = "extracted"


class Stage(str, Enum):
    GENERATED = "generated"
    STYLE_TRANSFERRED = "style_transferred"


class FilterVerdict(str, Enum):
    KEPT = "kept"
    REMOVED_DUPLICATE = "removed_duplicate"
    REMOVED_OUTLIER = "removed_outlier"
    PENDING = "pending"


EmbeddingVector = tuple[float, ...]


def validate_embedding(values: Iterable[float]) -> EmbeddingVector:
    """Coerce to a 512-tuple of finite floats or raise."""
    vec = tuple(float(v) for v in values)
    if len(vec) != EMBEDDING_DIM:
        raise ValidationError(f"embedding length must be {EMBEDDING_DIM}, got {len(vec)}")
    for v in vec:
        if not math.isfinite(v):
            raise ValidationError("embedding contains a non-finite value")
    return vec


@dataclass(frozen=True)
class Context:
    """One axis of the dataset description: a name plus its candidate options."""

    name: str
    options: tuple[str, ...]
    mandatory: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "options", tuple(self.options))
        if not self.name:
            raise ValidationError("context name must be non-empty")
        if not self.options:
            raise ValidationError(f"context {self.name!r}: options must be non-empty")
        if any(not isinstance(o, str) or not o for o in self.options):
            raise ValidationError(f"context {self.name!r}: options must be non-empty strings")
        if len(set(self.options)) != len(self.options):
            raise ValidationError(f"context {self.name!r}: duplicate options")

    def to_json_dict(self) -> dict[str, Any]:
        return {"name": self.name, "options": list(self.options), "mandatory": self.mandatory}

    @classmethod
    def from_json_dict(cls, raw: Mapping[str, Any]) -> "Context":
        return cls(
            name=str(raw["name"]),
            options=tuple(str(o) for o in raw["options"]),
            mandatory=bool(raw.get("mandatory", False)),
        )


@dataclass(frozen=True)
class ContextGrammar:
    """Ordered contexts describing a dataset. Context position is significant:
    earlier contexts weigh more in the rendered prompt, and the order survives
    serialization round trips.
    """

    contexts: tuple[Context, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "contexts", tuple(self.contexts))
        names = [c.name for c in self.contexts]
        if len(set(names)) != len(names):
            raise ValidationError("duplicate context names")
        categories = [c for c in self.contexts if c.name == CATEGORY_CONTEXT]
        if len(categories) != 1:
            raise ValidationError("exactly one 'category' context is required")
        if not categories[0].mandatory:
            raise ValidationError("the 'category' context must be mandatory")

    @property
    def category(self) -> Context:
        return next(c for c in self.contexts if c.name == CATEGORY_CONTEXT)

    def class_labels(self) -> tuple[str, ...]:
        return tuple(sorted(self.category.options))

    def to_json_dict(self) -> dict[str, Any]:
        return {"contexts": [c.to_json_dict() for c in self.contexts]}

    @classmethod
    def from_json_dict(cls, raw: Mapping[str, Any]) -> "ContextGrammar":
        return cls(contexts=tuple(Context.from_json_dict(c) for c in raw["contexts"]))


@dataclass(frozen=True)
class ContextCombination:
    """One choice per context, in grammar order; the category choice is the class label."""

    assignments: tuple[tuple[str, str], ...]

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "assignments", tuple((str(n), str(o)) for n, o in self.assignments)
        )
        if not any(n == CATEGORY_CONTEXT for n, _ in self.assignments):
            raise ValidationError("combination must assign the 'category' context")

    @property
    def class_label(self) -> str:
        return next(o for n, o in self.assignments if n == CATEGORY_CONTEXT)

    def option_for(self, context_name: str) -> str | None:
        for name, option in self.assignments:
            if name == context_name:
                return option
        return None

    def options(self) -> tuple[str, ...]:
        return tuple(o for _, o in self.assignments)

    def to_json_dict(self) -> dict[str, Any]:
        return {"assignments": [[n, o] for n, o in self.assignments]}

    @classmethod
    def from_json_dict(cls, raw: Mapping[str, Any]) -> "ContextCombination":
        return cls(assignments=tuple((str(n), str(o)) for n, o in raw["assignments"]))


@dataclass(frozen=True)
class PromptRecord:
    """A generation prompt: ordered (term, weight) pairs plus provenance."""

    id: str
    terms: tuple[tuple[str, float], ...]
    source: PromptSource
    class_label: str
    combination: ContextCombination | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "terms", tuple((str(t), float(w)) for t, w in self.terms))
        object.__setattr__(self, "source", PromptSource(self.source))
        if not self.id:
            raise ValidationError("prompt id must be non-empty")
        if not self.terms:
            raise ValidationError(f"prompt {self.id}: terms must be non-empty")
        for term, weight in self.terms:
            if not (0.0 < weight <= MAX_TERM_WEIGHT):
                raise ValidationError(
                    f"prompt {self.id}: weight {weight} outside (0, {MAX_TERM_WEIGHT}]"
                )
        if self.source is PromptSource.EXTRACTED and self.combination is not None:
            raise ValidationError(f"prompt {self.id}: extracted prompts carry no combination")
        if not self.class_label:
            raise ValidationError(f"prompt {self.id}: class_label must be non-empty")

    def text(self) -> str:
        from air.prompts.syntax import serialize_prompt

        return serialize_prompt(self.terms)

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "terms": [[t, w] for t, w in self.terms],
            "source": self.source.value,
            "class_label": self.class_label,
            "combination": self.combination.to_json_dict() if self.combination else None,
        }

    @classmethod
    def from_json_dict(cls, raw: Mapping[str, Any]) -> "PromptRecord":
        combo = raw.get("combination")
        return cls(
            id=str(raw["id"]),
            terms=tuple((str(t), float(w)) for t, w in raw["terms"]),
            source=PromptSource(raw["source"]),
            class_label=str(raw["class_label"]),
            combination=ContextCombination.from_json_dict(combo) if combo else None,
        )


@dataclass(frozen=True)
class ImageRecord:
    """A generated image: blob reference, embedding, and full provenance."""

    id: str
    class_label: str
    image_ref: str
    embedding: EmbeddingVector
    prompt_id: str
    seed: int
    stage_history: tuple[Stage, ...] = (Stage.GENERATED,)
    filter_verdict: FilterVerdict = FilterVerdict.PENDING

    def __post_init__(self) -> None:
        object.__setattr__(self, "embedding", validate_embedding(self.embedding))
        object.__setattr__(self, "stage_history", tuple(Stage(s) for s in self.stage_history))
        object.__setattr__(self, "filter_verdict", FilterVerdict(self.filter_verdict))
        if not self.id:
            raise ValidationError("image id must be non-empty")
        if not (0 <= self.seed < 2**64):
            raise ValidationError(f"image {self.id}: seed must fit in 64 unsigned bits")
        if not self.stage_history or self.stage_history[0] is not Stage.GENERATED:
            raise ValidationError(f"image {self.id}: stage history must begin with 'generated'")
        if sum(1 for s in self.stage_history if s is Stage.STYLE_TRANSFERRED) > 1:
            raise ValidationError(f"image {self.id}: style transfer may appear at most once")

    def to_json_dict(self, embedding_row: int) -> dict[str, Any]:
        return {
            "id": self.id,
            "class_label": self.class_label,
            "image_ref": self.image_ref,
            "embedding_row": embedding_row,
            "prompt_id": self.prompt_id,
            "seed": self.seed,
            "stage_history": [s.value for s in self.stage_history],
            "filter_verdict": self.filter_verdict.value,
        }


@dataclass(frozen=True)
class DatasetManifest:
    """The complete description of one dataset on disk."""

    dataset_id: str
    name: str
    classes: tuple[str, ...]
    prompts: tuple[PromptRecord, ...] = ()
    images: tuple[ImageRecord, ...] = ()
    grammar: ContextGrammar | None = None
    created_at: str = "1970-01-01T00:00:00+00:00"
    pipeline_config: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "classes", tuple(self.classes))
        object.__setattr__(self, "prompts", tuple(self.prompts))
        object.__setattr__(self, "images", tuple(self.images))
        object.__setattr__(self, "pipeline_config", dict(self.pipeline_config))
        if not self.dataset_id:
            raise ValidationError("dataset_id must be non-empty")
        if list(self.classes) != sorted(set(self.classes)):
            raise ValidationError("classes must be sorted and distinct")
        prompt_ids = {p.id for p in self.prompts}
        if len(prompt_ids) != len(self.prompts):
            raise ValidationError("duplicate prompt ids")
        image_ids = {i.id for i in self.images}
        if len(image_ids) != len(self.images):
            raise ValidationError("duplicate image ids")
        for image in self.images:
            if image.prompt_id not in prompt_ids:
                raise ValidationError(
                    f"image {image.id}: unknown prompt_id {image.prompt_id!r}"
                )
            if image.class_label not in self.classes:
                raise ValidationError(
                    f"image {image.id}: class_label {image.class_label!r} not in classes"
                )

    def kept_images(self) -> tuple[ImageRecord, ...]:
        return tuple(i for i in self.images if i.filter_verdict is FilterVerdict.KEPT)

    def images_by_class(
        self, records: Sequence[ImageRecord] | None = None
    ) -> dict[str, list[ImageRecord]]:
        grouped: dict[str, list[ImageRecord]] = {c: [] for c in self.classes}
        for image in self.images if records is None else records:
            grouped[image.class_label].append(image)
        return grouped

    def with_verdicts(self, verdicts: Mapping[str, FilterVerdict]) -> "DatasetManifest":
        """New manifest with the given per-image verdicts applied."""
        images = tuple(
            replace(img, filter_verdict=verdicts.get(img.id, img.filter_verdict))
            for img in self.images
        )
        return replace(self, images=images)
