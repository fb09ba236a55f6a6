"""Backend configuration and environment-variable resolution."""

from __future__ import annotations

import os
from dataclasses import dataclass
from enum import Enum

from air.errors import ValidationError


class BackendKind(str, Enum):
    TEXT_TO_IMAGE = "text_to_image"
    EMBEDDER = "embedder"
    CAPTIONER = "captioner"
    REWRITER = "rewriter"
    STYLE_TRANSFER = "style_transfer"


class BackendMode(str, Enum):
    MOCK = "mock"
    HTTP = "http"


_URL_ENV = {
    BackendKind.TEXT_TO_IMAGE: "AIR_T2I_URL",
    BackendKind.EMBEDDER: "AIR_EMBED_URL",
    BackendKind.CAPTIONER: "AIR_CAPTION_URL",
    BackendKind.REWRITER: "AIR_REWRITE_URL",
    BackendKind.STYLE_TRANSFER: "AIR_STYLE_URL",
}

MODE_ENV = "AIR_BACKEND_MODE"


@dataclass(frozen=True)
class BackendConfig:
    kind: BackendKind
    mode: BackendMode = BackendMode.MOCK
    base_url: str | None = None
    timeout: float = 30.0
    max_parallel: int = 4
    auth_token: str | None = None
    mock_sigma: float = 0.05  # embedder mock noise scale (expected noise norm)

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", BackendKind(self.kind))
        object.__setattr__(self, "mode", BackendMode(self.mode))
        if self.mode is BackendMode.HTTP and not self.base_url:
            raise ValidationError(f"{self.kind.value}: http mode requires base_url")
        if self.max_parallel < 1:
            raise ValidationError(f"{self.kind.value}: max_parallel must be >= 1")
        if self.timeout <= 0:
            raise ValidationError(f"{self.kind.value}: timeout must be positive")
        if self.mock_sigma < 0:
            raise ValidationError(f"{self.kind.value}: mock_sigma must be >= 0")


def config_from_env(kind: BackendKind, environ: dict[str, str] | None = None) -> BackendConfig:
    env = os.environ if environ is None else environ
    mode = BackendMode(env.get(MODE_ENV, "mock"))
    return BackendConfig(
        kind=kind,
        mode=mode,
        base_url=env.get(_URL_ENV[kind]),
        auth_token=env.get("AIR_AUTH_TOKEN"),
    )
