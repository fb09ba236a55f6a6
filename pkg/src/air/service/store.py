"""On-disk layout for the service: datasets, models, job event journals."""

from __future__ import annotations

import json
import uuid
from pathlib import Path
from typing import Any

from air.core.manifest import load_manifest
from air.core.canonical import write_canonical_json
from air.core.types import DatasetManifest
from air.errors import NotFoundError


class DataStore:
    def __init__(self, root: Path | str) -> None:
        self.root = Path(root)
        (self.root / "datasets").mkdir(parents=True, exist_ok=True)
        (self.root / "models").mkdir(parents=True, exist_ok=True)

    # -- datasets

    def new_dataset_id(self) -> str:
        return f"ds-{uuid.uuid4().hex[:12]}"

    def dataset_dir(self, dataset_id: str, must_exist: bool = True) -> Path:
        path = self.root / "datasets" / dataset_id
        if must_exist and not (path / "manifest.json").exists():
            raise NotFoundError(f"unknown dataset: {dataset_id}")
        return path

    def load_dataset(self, dataset_id: str) -> DatasetManifest:
        return load_manifest(self.dataset_dir(dataset_id))

    def dataset_ids(self) -> list[str]:
        return sorted(
            p.name for p in (self.root / "datasets").iterdir() if (p / "manifest.json").exists()
        )

    # -- models

    def new_model_id(self) -> str:
        return f"m-{uuid.uuid4().hex[:12]}"

    def model_dir(self, model_id: str, must_exist: bool = True) -> Path:
        path = self.root / "models" / model_id
        if must_exist and not (path / "model.json").exists():
            raise NotFoundError(f"unknown model: {model_id}")
        return path

    def write_metrics(self, model_id: str, payload: dict[str, Any]) -> None:
        write_canonical_json(self.model_dir(model_id) / "metrics.json", payload)

    def read_metrics(self, model_id: str) -> dict[str, Any]:
        path = self.model_dir(model_id) / "metrics.json"
        if not path.exists():
            raise NotFoundError(f"no metrics recorded for model: {model_id}")
        return json.loads(path.read_text("utf-8"))
