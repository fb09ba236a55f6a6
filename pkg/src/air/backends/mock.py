"""Deterministic mock backends.

Every mock is a pure function of its declared inputs plus static config:
repeated calls return bit-identical results, and no network is touched.
Generated PNGs carry their class label in a tEXt chunk so the embedder and
captioner mocks can recover record metadata from the payload alone.
"""

from __future__ import annotations

import hashlib

import numpy as np

from air.backends.png import LABEL_KEY, PROMPT_KEY, decode_png, encode_png, read_text_chunks
from air.core.types import PromptRecord
from air.errors import ValidationError
from air.prompts.engineer import RewriteRequest

VALID_IMAGE_SIZES = (256, 512, 1024)

# Per-channel RGB offsets; scale is fixed at 1 so repeated applications
# compose exactly (integer adds under clipping commute with composition).
STYLE_DOMAINS: dict[str, tuple[int, int, int]] = {
    "none": (0, 0, 0),
    "warm": (18, 4, -18),
    "cool": (-18, -4, 18),
}


def _rng_from(*parts: object) -> np.random.Generator:
    digest = hashlib.sha256("\x1f".join(str(p) for p in parts).encode("utf-8")).digest()
    return np.random.default_rng(int.from_bytes(digest[:8], "little"))


class MockTextToImage:
    """Keyed-hash pseudorandom RGB texture; same (prompt, seed, size) -> same bytes."""

    def generate(self, prompt: PromptRecord, seed: int, size: int) -> bytes:
        if size not in VALID_IMAGE_SIZES:
            raise ValidationError(f"size must be one of {VALID_IMAGE_SIZES}, got {size}")
        text = prompt.text()
        rng = _rng_from("t2i", text, seed, size)
        pixels = rng.integers(0, 256, size=(size, size, 3), dtype=np.uint8)
        return encode_png(pixels, text={LABEL_KEY: prompt.class_label, PROMPT_KEY: prompt.id})


class MockEmbedder:
    """Class-anchored unit embeddings.

    The anchor is a deterministic unit vector per class label; each image adds
    content-hash-seeded Gaussian-direction noise of norm `sigma` and is then
    renormalized. Identical bytes embed identically; images of one class
    cluster tightly (pairwise cosine >= cos(2*arcsin(sigma))).
    """

    def __init__(self, sigma: float = 0.05, dim: int = 512) -> None:
        self.sigma = float(sigma)
        self.dim = dim

    def class_anchor(self, label: str) -> np.ndarray:
        g = _rng_from("anchor", label).standard_normal(self.dim)
        return g / np.linalg.norm(g)

    def embed(self, image_bytes: bytes) -> np.ndarray:
        decode_png(image_bytes)  # raises on undecodable payloads
        label = read_text_chunks(image_bytes).get(LABEL_KEY, "image")
        anchor = self.class_anchor(label)
        content = hashlib.sha256(image_bytes).hexdigest()
        g = _rng_from("noise", content).standard_normal(self.dim)
        vec = anchor + self.sigma * g / np.linalg.norm(g)
        vec = vec / np.linalg.norm(vec)
        return vec.astype(np.float32)


class MockCaptioner:
    """Caption derived from the embedded label and a content-hash detail tag.

    The hash tag guarantees distinct images get distinct captions.
    """

    def caption(self, image_bytes: bytes) -> str:
        decode_png(image_bytes)
        label = read_text_chunks(image_bytes).get(LABEL_KEY, "image")
        detail = hashlib.sha256(image_bytes).hexdigest()[:8]
        return f"photo of {label}, detail {detail}"


class MockRewriter:
    """Fixed template expansion standing in for a language-model rewriter."""

    def rewrite(self, request: RewriteRequest) -> str:
        combo = request.combination
        category = combo.class_label
        view = combo.option_for("view") or "view"
        location = combo.option_for("location") or "scene"
        time = combo.option_for("time") or "day"
        used = {"category", "view", "location", "time"}
        extras = [opt for name, opt in combo.assignments if name not in used]
        parts = [f"A captivating {view} of a {location} in the {time}", f"({category}:1.4)"]
        parts.extend(extras)
        parts.extend(["4K UHD image", "Photorealistic"])
        return ", ".join(parts)


class MockStyleTransfer:
    """Global color-temperature shift: per-channel integer offsets, clipped.

    Text chunks are preserved so downstream mocks keep seeing the label.
    """

    def transfer(self, image_bytes: bytes, target_domain_id: str) -> bytes:
        if target_domain_id not in STYLE_DOMAINS:
            raise ValidationError(f"unknown style domain: {target_domain_id!r}")
        offsets = np.array(STYLE_DOMAINS[target_domain_id], dtype=np.int16)
        pixels = decode_png(image_bytes).astype(np.int16)
        shifted = np.clip(pixels + offsets, 0, 255).astype(np.uint8)
        return encode_png(shifted, text=read_text_chunks(image_bytes))
