"""Request models for the v1 API. Unknown fields are rejected everywhere."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field

from air.core.types import Context, ContextGrammar
from air.filtering import FilterParams
from air.pipeline.config import PipelineConfig
from air.training.probe import TrainConfig


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ContextIn(StrictModel):
    name: str
    options: list[str]
    mandatory: bool = False


class GrammarIn(StrictModel):
    contexts: list[ContextIn]

    def to_domain(self) -> ContextGrammar:
        return ContextGrammar(
            contexts=tuple(
                Context(name=c.name, options=tuple(c.options), mandatory=c.mandatory)
                for c in self.contexts
            )
        )


class FilterParamsIn(StrictModel):
    beta: float = 0.9825
    retention_target: float = 0.9
    alpha: float | None = None
    per_class: bool = True
    search_iterations: int = 40

    def to_domain(self) -> FilterParams:
        return FilterParams(
            beta=self.beta,
            retention_target=self.retention_target,
            alpha=self.alpha,
            per_class=self.per_class,
            search_iterations=self.search_iterations,
        )


class PipelineConfigIn(StrictModel):
    images_per_prompt: int = 8
    image_size: int = 512
    use_rewriter: bool = True
    use_style_transfer: bool = False
    style_domain: str = "warm"
    use_filter: bool = True
    filter: FilterParamsIn = Field(default_factory=FilterParamsIn)
    seed: int = 0
    parallelism: int = 4

    def to_domain(self) -> PipelineConfig:
        return PipelineConfig(
            images_per_prompt=self.images_per_prompt,
            image_size=self.image_size,
            use_rewriter=self.use_rewriter,
            use_style_transfer=self.use_style_transfer,
            style_domain=self.style_domain,
            use_filter=self.use_filter,
            filter=self.filter.to_domain(),
            seed=self.seed,
            parallelism=self.parallelism,
        )


class CreateDatasetIn(StrictModel):
    name: str = ""
    grammar: GrammarIn
    config: PipelineConfigIn = Field(default_factory=PipelineConfigIn)


class AugmentIn(StrictModel):
    name: str = ""
    config: PipelineConfigIn = Field(default_factory=PipelineConfigIn)


class TrainConfigIn(StrictModel):
    learning_rate: float = 1e-3
    batch_size: int = 64
    epochs: int = 25
    optimizer: Literal["sgd", "adamw"] = "adamw"
    weight_decay: float = 0.01
    seed: int = 0
    train_fraction: float = 0.8

    def to_domain(self) -> TrainConfig:
        return TrainConfig(
            learning_rate=self.learning_rate,
            batch_size=self.batch_size,
            epochs=self.epochs,
            optimizer=self.optimizer,
            weight_decay=self.weight_decay,
            seed=self.seed,
            train_fraction=self.train_fraction,
        )


class MergeIn(StrictModel):
    augmented_id: str
    fraction: float


class TrainIn(StrictModel):
    dataset_id: str
    train: TrainConfigIn = Field(default_factory=TrainConfigIn)
    merge: MergeIn | None = None
    kfold: int | None = None


class PredictIn(StrictModel):
    image_b64: str | None = None
    embedding: list[float] | None = None
