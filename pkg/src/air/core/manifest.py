"""Manifest persistence: canonical JSON plus a binary embedding sidecar.

Layout of a dataset directory:

    manifest.json    canonical JSON, schema field "air_schema": 1
    embeddings.bin   magic b"AIRE", u32le count, u32le dim, then count*dim f32le
                     values, row-major in manifest image order
    blobs/<sha256 hex>.png   content-addressed image payloads

Embeddings live out of line so manifests stay diffable; the JSON stores only
row offsets into the sidecar. Two saves of equal manifests are byte-identical.
"""

from __future__ import annotations

import hashlib
import os
import struct
import time
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Iterator

import numpy as np

from air.core.canonical import write_bytes_atomic, write_canonical_json
from air.core.types import (
    EMBEDDING_DIM,
    ContextGrammar,
    DatasetManifest,
    FilterVerdict,
    ImageRecord,
    PromptRecord,
    Stage,
)
from air.errors import ConflictError, PersistenceError, SchemaError

SCHEMA_VERSION = 1
MANIFEST_FILE = "manifest.json"
EMBEDDINGS_FILE = "embeddings.bin"
BLOBS_DIR = "blobs"
LOCK_FILE = ".lock"

_EMBED_MAGIC = b"AIRE"
_EMBED_HEADER = struct.Struct("<4sII")


@contextmanager
def dataset_write_lock(directory: Path, timeout: float = 10.0) -> Iterator[None]:
    """Advisory single-writer lock on a dataset directory. Reads need no lock."""
    directory.mkdir(parents=True, exist_ok=True)
    lock_path = directory / LOCK_FILE
    deadline = time.monotonic() + timeout
    while True:
        try:
            fd = os.open(lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
            break
        except FileExistsError:
            if time.monotonic() >= deadline:
                raise ConflictError(f"dataset directory is locked by another writer: {directory}")
            time.sleep(0.05)
    try:
        os.write(fd, str(os.getpid()).encode("ascii"))
        os.close(fd)
        yield
    finally:
        try:
            os.unlink(lock_path)
        except OSError:
            pass


def _encode_embeddings(images: tuple[ImageRecord, ...]) -> bytes:
    header = _EMBED_HEADER.pack(_EMBED_MAGIC, len(images), EMBEDDING_DIM)
    if not images:
        return header
    matrix = np.asarray([img.embedding for img in images], dtype=np.float32)
    return header + matrix.tobytes(order="C")


def _decode_embeddings(payload: bytes, path: Path) -> np.ndarray:
    if len(payload) < _EMBED_HEADER.size:
        raise SchemaError(f"embedding file truncated: {path}")
    magic, count, dim = _EMBED_HEADER.unpack_from(payload)
    if magic != _EMBED_MAGIC:
        raise SchemaError(f"bad embedding file magic in {path}")
    if dim != EMBEDDING_DIM:
        raise SchemaError(f"embedding dim must be {EMBEDDING_DIM}, file says {dim}")
    expected = _EMBED_HEADER.size + count * dim * 4
    if len(payload) != expected:
        raise SchemaError(
            f"embedding payload size mismatch in {path}: expected {expected} bytes, got {len(payload)}"
        )
    data = np.frombuffer(payload, dtype="<f4", offset=_EMBED_HEADER.size)
    return data.reshape(count, dim)


def manifest_to_json_dict(manifest: DatasetManifest) -> dict[str, Any]:
    return {
        "air_schema": SCHEMA_VERSION,
        "dataset_id": manifest.dataset_id,
        "name": manifest.name,
        "classes": list(manifest.classes),
        "created_at": manifest.created_at,
        "grammar": manifest.grammar.to_json_dict() if manifest.grammar else None,
        "pipeline_config": dict(manifest.pipeline_config),
        "prompts": [p.to_json_dict() for p in manifest.prompts],
        "images": [img.to_json_dict(row) for row, img in enumerate(manifest.images)],
    }


def save_manifest(manifest: DatasetManifest, directory: Path | str) -> None:
    """Persist manifest + embedding sidecar atomically under `directory`."""
    directory = Path(directory)
    if not directory.parent.exists():
        raise PersistenceError("parent directory does not exist", str(directory.parent))
    directory.mkdir(exist_ok=True)
    write_bytes_atomic(directory / EMBEDDINGS_FILE, _encode_embeddings(manifest.images))
    write_canonical_json(directory / MANIFEST_FILE, manifest_to_json_dict(manifest))


def load_manifest(directory: Path | str) -> DatasetManifest:
    """Load and fully re-validate a dataset directory."""
    import json

    directory = Path(directory)
    manifest_path = directory / MANIFEST_FILE
    try:
        raw = json.loads(manifest_path.read_text("utf-8"))
    except OSError as exc:
        raise PersistenceError(f"cannot read manifest: {exc}", str(manifest_path)) from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(f"manifest is not valid JSON: {manifest_path}: {exc}") from exc

    if not isinstance(raw, dict) or raw.get("air_schema") != SCHEMA_VERSION:
        raise SchemaError(f"unsupported or missing air_schema in {manifest_path}")

    try:
        payload = (directory / EMBEDDINGS_FILE).read_bytes()
    except OSError as exc:
        raise PersistenceError(f"cannot read embeddings: {exc}", str(directory)) from exc
    matrix = _decode_embeddings(payload, directory / EMBEDDINGS_FILE)

    raw_images = raw.get("images", [])
    if matrix.shape[0] != len(raw_images):
        raise SchemaError(
            f"embedding count {matrix.shape[0]} does not match {len(raw_images)} images"
        )

    try:
        prompts = tuple(PromptRecord.from_json_dict(p) for p in raw.get("prompts", []))
        images = []
        for idx, item in enumerate(raw_images):
            row = int(item["embedding_row"])
            if row != idx:
                raise SchemaError(f"image {item.get('id')}: embedding_row {row} out of order")
            images.append(
                ImageRecord(
                    id=str(item["id"]),
                    class_label=str(item["class_label"]),
                    image_ref=str(item["image_ref"]),
                    embedding=tuple(float(v) for v in matrix[idx]),
                    prompt_id=str(item["prompt_id"]),
                    seed=int(item["seed"]),
                    stage_history=tuple(Stage(s) for s in item["stage_history"]),
                    filter_verdict=FilterVerdict(item["filter_verdict"]),
                )
            )
        grammar_raw = raw.get("grammar")
        manifest = DatasetManifest(
            dataset_id=str(raw["dataset_id"]),
            name=str(raw.get("name", "")),
            classes=tuple(str(c) for c in raw.get("classes", [])),
            prompts=prompts,
            images=tuple(images),
            grammar=ContextGrammar.from_json_dict(grammar_raw) if grammar_raw else None,
            created_at=str(raw.get("created_at", "")),
            pipeline_config=dict(raw.get("pipeline_config", {})),
        )
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"manifest field missing or malformed: {exc}") from exc
    return manifest


def store_blob(directory: Path | str, payload: bytes) -> str:
    """Store image bytes content-addressed; returns the relative blob path."""
    directory = Path(directory)
    digest = hashlib.sha256(payload).hexdigest()
    rel = f"{BLOBS_DIR}/{digest}.png"
    target = directory / BLOBS_DIR / f"{digest}.png"
    if not target.exists():
        target.parent.mkdir(parents=True, exist_ok=True)
        write_bytes_atomic(target, payload)
    return rel


def read_blob(directory: Path | str, image_ref: str) -> bytes:
    path = Path(directory) / image_ref
    try:
        return path.read_bytes()
    except OSError as exc:
        raise PersistenceError(f"cannot read blob: {exc}", str(path)) from exc
