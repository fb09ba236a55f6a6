"""Minimal deterministic PNG codec.

Encoding is hand-rolled (fixed zlib level, no ancillary chunks beyond tEXt)
so identical pixel data always yields identical bytes regardless of imaging
library versions. Decoding delegates to Pillow. Metadata rides in tEXt
chunks with UTF-8 payloads; only this package's mock backends consume them.
"""

from __future__ import annotations

import io
import struct
import zlib

import numpy as np
from PIL import Image

from air.errors import ValidationError

_SIGNATURE = b"\x89PNG\r\n\x1a\n"
_ZLIB_LEVEL = 6

LABEL_KEY = "air.label"
PROMPT_KEY = "air.prompt"


def _chunk(chunk_type: bytes, data: bytes) -> bytes:
    return (
        struct.pack(">I", len(data))
        + chunk_type
        + data
        + struct.pack(">I", zlib.crc32(chunk_type + data) & 0xFFFFFFFF)
    )


def encode_png(pixels: np.ndarray, text: dict[str, str] | None = None) -> bytes:
    """Encode an (h, w, 3) uint8 array as RGB PNG with optional tEXt chunks."""
    if pixels.ndim != 3 or pixels.shape[2] != 3 or pixels.dtype != np.uint8:
        raise ValidationError(f"expected (h, w, 3) uint8 pixels, got {pixels.shape} {pixels.dtype}")
    height, width = pixels.shape[:2]
    header = struct.pack(">IIBBBBB", width, height, 8, 2, 0, 0, 0)
    raw = b"".join(b"\x00" + pixels[row].tobytes() for row in range(height))
    parts = [_SIGNATURE, _chunk(b"IHDR", header)]
    for key in sorted(text or {}):
        parts.append(_chunk(b"tEXt", key.encode("latin-1") + b"\x00" + (text or {})[key].encode("utf-8")))
    parts.append(_chunk(b"IDAT", zlib.compress(raw, _ZLIB_LEVEL)))
    parts.append(_chunk(b"IEND", b""))
    return b"".join(parts)


def decode_png(payload: bytes) -> np.ndarray:
    """Decode any Pillow-supported image payload to an (h, w, 3) uint8 array."""
    try:
        with Image.open(io.BytesIO(payload)) as im:
            return np.asarray(im.convert("RGB"), dtype=np.uint8)
    except Exception as exc:
        raise ValidationError(f"undecodable image payload: {exc}") from exc


def read_text_chunks(payload: bytes) -> dict[str, str]:
    """Raw tEXt chunks of a PNG payload; empty for non-PNG payloads."""
    if not payload.startswith(_SIGNATURE):
        return {}
    out: dict[str, str] = {}
    pos = len(_SIGNATURE)
    while pos + 8 <= len(payload):
        (length,) = struct.unpack_from(">I", payload, pos)
        chunk_type = payload[pos + 4 : pos + 8]
        data = payload[pos + 8 : pos + 8 + length]
        if chunk_type == b"tEXt" and b"\x00" in data:
            key, _, value = data.partition(b"\x00")
            out[key.decode("latin-1")] = value.decode("utf-8", errors="replace")
        if chunk_type == b"IEND":
            break
        pos += 12 + length
    return out


def image_size(payload: bytes) -> tuple[int, int]:
    with Image.open(io.BytesIO(payload)) as im:
        return im.size
