"""Pipeline run configuration."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from air.errors import ValidationError
from air.filtering import FilterParams

VALID_SIZES = (256, 512, 1024)


@dataclass(frozen=True)
class PipelineConfig:
    images_per_prompt: int = 8
    image_size: int = 512
    use_rewriter: bool = True  # false = raw keyword prompts
    use_style_transfer: bool = False  # opt-in stage; costly with real backends
    style_domain: str = "warm"
    use_filter: bool = True
    filter: FilterParams = field(default_factory=FilterParams)
    seed: int = 0
    parallelism: int = 4

    def __post_init__(self) -> None:
        if self.images_per_prompt < 1:
            raise ValidationError("images_per_prompt must be positive")
        if self.image_size not in VALID_SIZES:
            raise ValidationError(f"image_size must be one of {VALID_SIZES}")
        if self.parallelism < 1:
            raise ValidationError("parallelism must be positive")
        if not (0 <= self.seed < 2**64):
            raise ValidationError("seed must fit in 64 unsigned bits")

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "images_per_prompt": self.images_per_prompt,
            "image_size": self.image_size,
            "use_rewriter": self.use_rewriter,
            "use_style_transfer": self.use_style_transfer,
            "style_domain": self.style_domain,
            "use_filter": self.use_filter,
            "filter": self.filter.to_json_dict(),
            "seed": self.seed,
            "parallelism": self.parallelism,
        }

    def content_dict(self) -> dict[str, Any]:
        """Config fields that determine dataset content. Execution knobs like
        parallelism are excluded: they must not change a single output byte."""
        snapshot = self.to_json_dict()
        snapshot.pop("parallelism")
        return snapshot

    @classmethod
    def from_json_dict(cls, raw: dict[str, Any]) -> "PipelineConfig":
        kwargs: dict[str, Any] = {
            f: raw[f] for f in cls.__dataclass_fields__ if f in raw and f != "filter"
        }
        if "filter" in raw:
            kwargs["filter"] = FilterParams.from_json_dict(raw["filter"])
        return cls(**kwargs)
