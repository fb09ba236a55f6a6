"""HTTP clients for externally served model backends.

Wire protocol: POST JSON to the configured base URL, JSON response. Fields
are {prompt|image_b64, seed, size|domain} in, {image_b64|embedding|caption|
text} out. Each client enforces its own max_parallel admission and retries
once on timeout (never on 4xx, which would duplicate generations).
"""

from __future__ import annotations

import base64
import random
import threading
import time
from typing import Any

import numpy as np
import requests

from air.backends.config import BackendConfig
from air.backends.png import image_size
from air.core.types import EMBEDDING_DIM, PromptRecord
from air.errors import BackendError
from air.prompts.engineer import RewriteRequest, get_template


class _HttpClient:
    def __init__(self, config: BackendConfig) -> None:
        if not config.base_url:
            raise BackendError("http backend requires base_url", endpoint=config.kind.value)
        self.config = config
        self._session = requests.Session()
        self._gate = threading.BoundedSemaphore(config.max_parallel)

    def _post(self, payload: dict[str, Any]) -> dict[str, Any]:
        url = self.config.base_url
        headers = {}
        if self.config.auth_token:
            headers["Authorization"] = f"Bearer {self.config.auth_token}"
        last_exc: Exception | None = None
        with self._gate:
            for attempt in range(2):
                try:
                    response = self._session.post(
                        url, json=payload, timeout=self.config.timeout, headers=headers
                    )
                except requests.Timeout as exc:
                    last_exc = exc
                    if attempt == 0:
                        time.sleep(random.uniform(0.05, 0.25))
                        continue
                    raise BackendError("request timed out", endpoint=url) from exc
                except requests.RequestException as exc:
                    raise BackendError(f"request failed: {exc}", endpoint=url) from exc
                if not (200 <= response.status_code < 300):
                    raise BackendError(
                        "backend returned an error",
                        endpoint=url,
                        status=response.status_code,
                    )
                try:
                    body = response.json()
                except ValueError as exc:
                    raise BackendError("malformed JSON response", endpoint=url) from exc
                if not isinstance(body, dict):
                    raise BackendError("response must be a JSON object", endpoint=url)
                return body
        raise BackendError(f"request failed: {last_exc}", endpoint=url)

    def _field(self, body: dict[str, Any], name: str) -> Any:
        if name not in body:
            raise BackendError(f"response missing field {name!r}", endpoint=self.config.base_url)
        return body[name]


class HttpTextToImage(_HttpClient):
    def generate(self, prompt: PromptRecord, seed: int, size: int) -> bytes:
        body = self._post({"prompt": prompt.text(), "seed": seed, "size": size})
        payload = base64.b64decode(self._field(body, "image_b64"))
        try:
            width, height = image_size(payload)
        except Exception as exc:
            raise BackendError("undecodable image payload", endpoint=self.config.base_url) from exc
        if (width, height) != (size, size):
            raise BackendError(
                f"expected {size}x{size} image, got {width}x{height}",
                endpoint=self.config.base_url,
            )
        return payload


class HttpEmbedder(_HttpClient):
    def embed(self, image_bytes: bytes) -> np.ndarray:
        body = self._post({"image_b64": base64.b64encode(image_bytes).decode("ascii")})
        values = self._field(body, "embedding")
        if not isinstance(values, list) or len(values) != EMBEDDING_DIM:
            raise BackendError(
                f"embedding must be a list of {EMBEDDING_DIM} floats",
                endpoint=self.config.base_url,
            )
        vec = np.asarray(values, dtype=np.float64)
        norm = np.linalg.norm(vec)
        if not np.isfinite(norm) or norm == 0:
            raise BackendError("embedding is zero or non-finite", endpoint=self.config.base_url)
        return (vec / norm).astype(np.float32)


class HttpCaptioner(_HttpClient):
    def caption(self, image_bytes: bytes) -> str:
        body = self._post({"image_b64": base64.b64encode(image_bytes).decode("ascii")})
        text = self._field(body, "caption")
        if not isinstance(text, str) or not text.strip():
            raise BackendError("caption must be non-empty text", endpoint=self.config.base_url)
        return text


class HttpRewriter(_HttpClient):
    def rewrite(self, request: RewriteRequest) -> str:
        template = get_template(request.instruction_template_id)
        body = self._post(
            {
                "instruction": template.instruction,
                "few_shots": [list(pair) for pair in template.few_shots],
                "keywords": ", ".join(request.combination.options()),
                "max_terms": request.max_terms,
            }
        )
        text = self._field(body, "text")
        if not isinstance(text, str):
            raise BackendError("rewrite response must be text", endpoint=self.config.base_url)
        return text


class HttpStyleTransfer(_HttpClient):
    def transfer(self, image_bytes: bytes, target_domain_id: str) -> bytes:
        body = self._post(
            {
                "image_b64": base64.b64encode(image_bytes).decode("ascii"),
                "domain": target_domain_id,
            }
        )
        return base64.b64decode(self._field(body, "image_b64"))
