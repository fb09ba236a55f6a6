"""Pluggable model backends: five capabilities, each with mock and HTTP modes."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, runtime_checkable

import numpy as np

from air.backends.config import MODE_ENV, BackendConfig, BackendKind, BackendMode, config_from_env
from air.backends.mock import (
    STYLE_DOMAINS,
    MockCaptioner,
    MockEmbedder,
    MockRewriter,
    MockStyleTransfer,
    MockTextToImage,
)
from air.core.types import EmbeddingVector, PromptRecord, PromptSource
from air.errors import PromptParseError
from air.prompts.engineer import RewriteRequest, prompt_id_for
from air.prompts.syntax import parse_prompt


@runtime_checkable
class TextToImageBackend(Protocol):
    def generate(self, prompt: PromptRecord, seed: int, size: int) -> bytes: ...


@runtime_checkable
class EmbedderBackend(Protocol):
    def embed(self, image_bytes: bytes) -> np.ndarray: ...


@runtime_checkable
class CaptionerBackend(Protocol):
    def caption(self, image_bytes: bytes) -> str: ...


@runtime_checkable
class RewriterBackend(Protocol):
    def rewrite(self, request: RewriteRequest) -> str: ...


@runtime_checkable
class StyleTransferBackend(Protocol):
    def transfer(self, image_bytes: bytes, target_domain_id: str) -> bytes: ...


@dataclass(frozen=True)
class BackendSet:
    """All five capabilities bundled for the pipeline."""

    text_to_image: TextToImageBackend
    embedder: EmbedderBackend
    captioner: CaptionerBackend
    rewriter: RewriterBackend
    style_transfer: StyleTransferBackend
    description: dict[str, str] | None = None
    max_parallel: int | None = None  # tightest backend admission limit; None = unbounded

    def describe(self) -> dict[str, str]:
        return dict(self.description or {})


def build_backend(config: BackendConfig):
    """Instantiate one backend from its config."""
    from air.backends import http as http_clients

    if config.mode is BackendMode.MOCK:
        return {
            BackendKind.TEXT_TO_IMAGE: lambda: MockTextToImage(),
            BackendKind.EMBEDDER: lambda: MockEmbedder(sigma=config.mock_sigma),
            BackendKind.CAPTIONER: lambda: MockCaptioner(),
            BackendKind.REWRITER: lambda: MockRewriter(),
            BackendKind.STYLE_TRANSFER: lambda: MockStyleTransfer(),
        }[config.kind]()
    return {
        BackendKind.TEXT_TO_IMAGE: http_clients.HttpTextToImage,
        BackendKind.EMBEDDER: http_clients.HttpEmbedder,
        BackendKind.CAPTIONER: http_clients.HttpCaptioner,
        BackendKind.REWRITER: http_clients.HttpRewriter,
        BackendKind.STYLE_TRANSFER: http_clients.HttpStyleTransfer,
    }[config.kind](config)


def build_backend_set(
    mode: str | BackendMode | None = None,
    embed_sigma: float = 0.05,
    environ: dict[str, str] | None = None,
) -> BackendSet:
    """Build all five backends from explicit args or environment variables."""
    import os

    env = os.environ if environ is None else environ
    resolved_mode = BackendMode(mode) if mode is not None else BackendMode(env.get(MODE_ENV, "mock"))
    configs = {}
    description = {"mode": resolved_mode.value, "embed_sigma": repr(embed_sigma)}
    for kind in BackendKind:
        base = config_from_env(kind, environ=env)
        configs[kind] = BackendConfig(
            kind=kind,
            mode=resolved_mode,
            base_url=base.base_url,
            auth_token=base.auth_token,
            mock_sigma=embed_sigma,
        )
        if resolved_mode is BackendMode.HTTP:
            description[kind.value] = str(base.base_url)
    limit = None
    if resolved_mode is BackendMode.HTTP:
        limit = min(c.max_parallel for c in configs.values())
    return BackendSet(
        text_to_image=build_backend(configs[BackendKind.TEXT_TO_IMAGE]),
        embedder=build_backend(configs[BackendKind.EMBEDDER]),
        captioner=build_backend(configs[BackendKind.CAPTIONER]),
        rewriter=build_backend(configs[BackendKind.REWRITER]),
        style_transfer=build_backend(configs[BackendKind.STYLE_TRANSFER]),
        description=description,
        max_parallel=limit,
    )


def as_embedding(vec: np.ndarray) -> EmbeddingVector:
    """Quantize to float32 and expose as a plain tuple for record storage."""
    return tuple(float(v) for v in np.asarray(vec, dtype=np.float32))


def caption_image(
    captioner: CaptionerBackend,
    image_bytes: bytes,
    class_label: str | None = None,
    record_key: str = "",
) -> PromptRecord:
    """Extract a caption and wrap it as a prompt record (source=extracted).

    Extracted prompts never pass through the rewriter. The class label comes
    from the caller (the source dataset's label) when given, falling back to
    label metadata embedded in the payload.
    """
    from air.backends.png import LABEL_KEY, read_text_chunks

    text = captioner.caption(image_bytes)
    label = class_label or read_text_chunks(image_bytes).get(LABEL_KEY, "image")
    try:
        terms = parse_prompt(text)
    except PromptParseError:
        terms = [(text.strip(), 1.0)]
    if not terms:
        terms = [(text.strip() or "image", 1.0)]
    return PromptRecord(
        id=prompt_id_for(PromptSource.EXTRACTED, label, text, record_key),
        terms=tuple(terms),
        source=PromptSource.EXTRACTED,
        class_label=label,
        combination=None,
    )


__all__ = [
    "BackendConfig",
    "BackendKind",
    "BackendMode",
    "BackendSet",
    "TextToImageBackend",
    "EmbedderBackend",
    "CaptionerBackend",
    "RewriterBackend",
    "StyleTransferBackend",
    "MockTextToImage",
    "MockEmbedder",
    "MockCaptioner",
    "MockRewriter",
    "MockStyleTransfer",
    "STYLE_DOMAINS",
    "build_backend",
    "build_backend_set",
    "caption_image",
    "as_embedding",
]
