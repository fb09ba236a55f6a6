"""Canonical JSON encoding: sorted keys, 9-significant-digit floats, atomic writes.

Identical values always encode to identical bytes, so file hashes double as
value equality checks. Encoding is a fixed point after one decode/encode round
trip (floats re-parse to doubles that format back to the same string).
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path
from typing import Any

from air.errors import PersistenceError, ValidationError


def format_float(value: float) -> str:
    if not math.isfinite(value):
        raise ValidationError(f"non-finite float not representable: {value!r}")
    if value == 0.0:  # normalize -0.0 so re-parsing cannot change the encoding
        return "0"
    return format(value, ".9g")


def _encode(value: Any, out: list[str]) -> None:
    if value is None:
        out.append("null")
    elif value is True:
        out.append("true")
    elif value is False:
        out.append("false")
    elif isinstance(value, str):
        out.append(json.dumps(value, ensure_ascii=True))
    elif isinstance(value, int):
        out.append(repr(value))
    elif isinstance(value, float):
        out.append(format_float(value))
    elif isinstance(value, dict):
        out.append("{")
        for i, key in enumerate(sorted(value)):
            if not isinstance(key, str):
                raise ValidationError(f"object keys must be strings, got {type(key).__name__}")
            if i:
                out.append(",")
            out.append(json.dumps(key, ensure_ascii=True))
            out.append(":")
            _encode(value[key], out)
        out.append("}")
    elif isinstance(value, (list, tuple)):
        out.append("[")
        for i, item in enumerate(value):
            if i:
                out.append(",")
            _encode(item, out)
        out.append("]")
    else:
        raise ValidationError(f"unsupported type for canonical JSON: {type(value).__name__}")


def canonical_json(value: Any) -> str:
    out: list[str] = []
    _encode(value, out)
    return "".join(out)


def write_bytes_atomic(path: Path, payload: bytes) -> None:
    """Write via a sibling temp file and rename, so readers never see partial files."""
    parent = path.parent
    if not parent.is_dir():
        raise PersistenceError("parent directory does not exist", str(parent))
    fd, tmp_name = tempfile.mkstemp(dir=parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp_name, path)
    except OSError as exc:
        try:
            os.unlink(tmp_name)
        except OSError:
            pass
        raise PersistenceError(f"write failed: {exc}", str(path)) from exc


def write_canonical_json(path: Path, value: Any) -> bytes:
    payload = (canonical_json(value) + "\n").encode("utf-8")
    write_bytes_atomic(path, payload)
    return payload
