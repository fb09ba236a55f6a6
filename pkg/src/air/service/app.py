"""FastAPI application exposing the v1 surface.

Long operations (generation, augmentation, training) return 202 with a job
id; clients poll `GET /v1/jobs/{id}` or stream `GET /v1/jobs/{id}/events`
(line-delimited JSON with heartbeats). Filter preview is strictly read-only;
filter apply writes a new manifest revision under the dataset lock.
"""

from __future__ import annotations

import base64
import json
import os
from pathlib import Path
from typing import Any

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, StreamingResponse

from air.backends import BackendSet, build_backend_set
from air.core.manifest import dataset_write_lock, save_manifest
from air.core.canonical import write_canonical_json
from air.core.splits import split_dataset
from air.core.types import EMBEDDING_DIM, DatasetManifest, ImageRecord
from air.errors import (
    AirError,
    BackendError,
    ConflictError,
    DivergenceError,
    InsufficientDataError,
    NotFoundError,
    PersistenceError,
    PromptParseError,
    SchemaError,
    ValidationError,
)
from air.filtering import FilterParams, filter_dataset
from air.pipeline import JobKind, JobManager, run_air_aug, run_air_gen
from air.service.schemas import (
    AugmentIn,
    CreateDatasetIn,
    FilterParamsIn,
    PredictIn,
    TrainIn,
)
from air.service.store import DataStore
from air.training import (
    cross_validate,
    evaluate,
    load_model,
    merge_for_training,
    predict,
    save_model,
    train_probe,
)
from air.training.crossval import features_and_labels

TERMINAL_STAGES = {"succeeded", "failed", "cancelled"}


def _error_payload(code: str, message: str, detail: Any = None) -> dict[str, Any]:
    body: dict[str, Any] = {"code": code, "message": message}
    if detail is not None:
        body["detail"] = detail
    return body


def _status_for(exc: AirError) -> tuple[int, str]:
    if isinstance(exc, NotFoundError):
        return 404, "not_found"
    if isinstance(exc, ConflictError):
        return 409, "conflict"
    if isinstance(exc, BackendError):
        return 503, "backend_unavailable"
    if isinstance(
        exc,
        (ValidationError, PromptParseError, SchemaError, InsufficientDataError, DivergenceError),
    ):
        return 400, "validation"
    if isinstance(exc, PersistenceError):
        return 500, "internal"
    return 500, "internal"


def _features_from_records(
    records: list[ImageRecord], classes: tuple[str, ...]
) -> tuple[np.ndarray, np.ndarray]:
    index = {c: i for i, c in enumerate(classes)}
    features = np.asarray([r.embedding for r in records], dtype=np.float64)
    labels = np.asarray([index[r.class_label] for r in records], dtype=np.int64)
    return features, labels


def create_app(
    data_dir: Path | str | None = None,
    backends: BackendSet | None = None,
    worker_count: int = 2,
    auth_token: str | None = None,
    heartbeat_seconds: float = 10.0,
) -> FastAPI:
    data_dir = Path(data_dir if data_dir is not None else os.environ.get("AIR_DATA_DIR", "air-data"))
    store = DataStore(data_dir)
    backend_set = backends if backends is not None else build_backend_set()
    manager = JobManager(worker_count=worker_count, data_dir=data_dir)
    token = auth_token if auth_token is not None else os.environ.get("AIR_AUTH_TOKEN")

    app = FastAPI(title="air", version="1")
    app.state.store = store
    app.state.jobs = manager
    app.state.backends = backend_set

    @app.exception_handler(AirError)
    async def air_error_handler(_request: Request, exc: AirError):
        status, code = _status_for(exc)
        return JSONResponse(status_code=status, content=_error_payload(code, str(exc)))

    @app.exception_handler(RequestValidationError)
    async def validation_handler(_request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content=_error_payload("validation", "invalid request body", detail=exc.errors()),
        )

    @app.middleware("http")
    async def bearer_auth(request: Request, call_next):
        if token and request.url.path.startswith("/v1/"):
            supplied = request.headers.get("Authorization", "")
            if supplied != f"Bearer {token}":
                return JSONResponse(
                    status_code=401,
                    content=_error_payload("validation", "missing or invalid bearer token"),
                )
        return await call_next(request)

    def _ensure_no_active_jobs(dataset_id: str) -> None:
        active = manager.active_dataset_jobs(dataset_id)
        if active:
            raise ConflictError(
                f"dataset {dataset_id} has active jobs: {[j.job_id for j in active]}"
            )

    # -- datasets

    @app.post("/v1/datasets", status_code=202)
    def create_dataset(body: CreateDatasetIn):
        grammar = body.grammar.to_domain()
        config = body.config.to_domain()
        dataset_id = store.new_dataset_id()
        out_dir = store.dataset_dir(dataset_id, must_exist=False)

        def run(handle):
            run_air_gen(
                grammar,
                config,
                backend_set,
                out_dir,
                dataset_id=dataset_id,
                name=body.name,
                emit=handle.emit,
                cancel_check=handle.check_cancelled,
            )
            return {"dataset_id": dataset_id}

        job_id = manager.submit(JobKind.AIR_GEN, run)
        manager.tag(job_id, dataset_id=dataset_id)
        return {"dataset_id": dataset_id, "job_id": job_id}

    @app.post("/v1/datasets/{dataset_id}/augment", status_code=202)
    def augment_dataset(dataset_id: str, body: AugmentIn):
        source = store.load_dataset(dataset_id)
        source_dir = store.dataset_dir(dataset_id)
        config = body.config.to_domain()
        new_id = store.new_dataset_id()
        out_dir = store.dataset_dir(new_id, must_exist=False)

        def run(handle):
            run_air_aug(
                source,
                source_dir,
                config,
                backend_set,
                out_dir,
                dataset_id=new_id,
                name=body.name or f"{source.name} replicated",
                emit=handle.emit,
                cancel_check=handle.check_cancelled,
            )
            return {"dataset_id": new_id, "source_dataset_id": dataset_id}

        job_id = manager.submit(JobKind.AIR_AUG, run)
        manager.tag(job_id, dataset_id=new_id, source_dataset_id=dataset_id)
        return {"dataset_id": new_id, "job_id": job_id}

    @app.get("/v1/datasets/{dataset_id}")
    def dataset_summary(dataset_id: str):
        manifest = store.load_dataset(dataset_id)
        counts: dict[str, dict[str, int]] = {
            c: {"kept": 0, "removed_duplicate": 0, "removed_outlier": 0, "pending": 0}
            for c in manifest.classes
        }
        for image in manifest.images:
            counts[image.class_label][image.filter_verdict.value] += 1
        return {
            "dataset_id": manifest.dataset_id,
            "name": manifest.name,
            "classes": list(manifest.classes),
            "created_at": manifest.created_at,
            "image_count": len(manifest.images),
            "prompt_count": len(manifest.prompts),
            "counts": counts,
        }

    @app.get("/v1/datasets/{dataset_id}/records")
    def dataset_records(dataset_id: str):
        """Prompt and image records for gallery/review screens."""
        manifest = store.load_dataset(dataset_id)
        return {
            "dataset_id": manifest.dataset_id,
            "prompts": [
                {
                    "id": p.id,
                    "text": p.text(),
                    "source": p.source.value,
                    "class_label": p.class_label,
                }
                for p in manifest.prompts
            ],
            "images": [
                {
                    "id": img.id,
                    "class_label": img.class_label,
                    "filter_verdict": img.filter_verdict.value,
                    "prompt_id": img.prompt_id,
                    "seed": img.seed,
                    "url": f"/v1/datasets/{dataset_id}/images/{img.id}",
                }
                for img in manifest.images
            ],
        }

    @app.get("/v1/datasets/{dataset_id}/images/{image_id}")
    def dataset_image(dataset_id: str, image_id: str):
        from fastapi.responses import Response

        manifest = store.load_dataset(dataset_id)
        record = next((img for img in manifest.images if img.id == image_id), None)
        if record is None:
            raise NotFoundError(f"unknown image: {image_id}")
        payload = (store.dataset_dir(dataset_id) / record.image_ref).read_bytes()
        return Response(content=payload, media_type="image/png")

    def _filter_params(
        alpha: float | None, beta: float | None, retention: float | None, per_class: bool
    ) -> FilterParams:
        base = FilterParamsIn()
        return FilterParams(
            beta=beta if beta is not None else base.beta,
            retention_target=retention if retention is not None else base.retention_target,
            alpha=alpha,
            per_class=per_class,
        )

    @app.post("/v1/datasets/{dataset_id}/filter/preview")
    def filter_preview(
        dataset_id: str,
        alpha: float | None = None,
        beta: float | None = None,
        retention: float | None = None,
        per_class: bool = True,
    ):
        manifest = store.load_dataset(dataset_id)
        _, report = filter_dataset(
            manifest, _filter_params(alpha, beta, retention, per_class)
        )
        return report.to_json_dict()

    @app.post("/v1/datasets/{dataset_id}/filter")
    def filter_apply(
        dataset_id: str,
        alpha: float | None = None,
        beta: float | None = None,
        retention: float | None = None,
        per_class: bool = True,
    ):
        _ensure_no_active_jobs(dataset_id)
        manifest = store.load_dataset(dataset_id)
        directory = store.dataset_dir(dataset_id)
        filtered, report = filter_dataset(
            manifest, _filter_params(alpha, beta, retention, per_class)
        )
        with dataset_write_lock(directory):
            save_manifest(filtered, directory)
            write_canonical_json(directory / "filter_report.json", report.to_json_dict())
        return report.to_json_dict()

    # -- models

    @app.post("/v1/models", status_code=202)
    def train_model(body: TrainIn):
        manifest = store.load_dataset(body.dataset_id)
        _ensure_no_active_jobs(body.dataset_id)
        config = body.train.to_domain()
        if body.kfold is not None and body.merge is not None:
            raise ValidationError("kfold and merge cannot be combined")
        merge_manifest: DatasetManifest | None = None
        if body.merge is not None:
            merge_manifest = store.load_dataset(body.merge.augmented_id)
        model_id = store.new_model_id()
        model_dir = store.model_dir(model_id, must_exist=False)
        kind = JobKind.CROSS_VALIDATE if body.kfold is not None else JobKind.TRAIN

        def run(handle):
            metrics_payload: dict[str, Any]
            if body.kfold is not None:
                result = cross_validate(
                    manifest,
                    body.kfold,
                    config,
                    progress=lambda e: handle.emit(
                        "train",
                        (e["fold"] + e["epoch"] / e["epochs"]) / body.kfold,
                        f"fold {e['fold']} epoch {e['epoch']}",
                        data=e,
                    ),
                )
                metrics_payload = {
                    "folds": [f.to_json_dict() for f in result.folds],
                    "mean": result.mean,
                }

            train_ids, val_ids = split_dataset(manifest, config.train_fraction, config.seed)
            train_x, train_y, classes = features_and_labels(manifest, train_ids)
            val_x, val_y, _ = features_and_labels(manifest, val_ids)
            if merge_manifest is not None:
                kept = {r.id: r for r in manifest.kept_images()}
                train_records = [kept[i] for i in train_ids]
                merged = merge_for_training(
                    manifest, merge_manifest, body.merge.fraction, config.seed
                )
                augmented_only = [r for r in merged if r.id not in kept]
                train_records.extend(augmented_only)
                train_x, train_y = _features_from_records(train_records, manifest.classes)

            model = train_probe(
                train_x,
                train_y,
                config,
                class_names=classes,
                progress=lambda e: handle.emit(
                    "train", e["epoch"] / e["epochs"], f"epoch {e['epoch']}", data=e
                ),
                val_features=val_x,
                val_labels=val_y,
            )
            report = evaluate(model, val_x, val_y)
            if body.kfold is None:
                metrics_payload = {"report": report.to_json_dict()}
            else:
                metrics_payload["report"] = report.to_json_dict()
            handle.emit("persist", 0.99, "writing model")
            save_model(model, model_dir)
            store.write_metrics(model_id, metrics_payload)
            handle.emit("persist", 1.0, "done")
            return {"model_id": model_id, "dataset_id": body.dataset_id}

        job_id = manager.submit(kind, run)
        manager.tag(job_id, model_id=model_id, dataset_id=body.dataset_id)
        return {"model_id": model_id, "job_id": job_id}

    @app.get("/v1/models/{model_id}/metrics")
    def model_metrics(model_id: str):
        return store.read_metrics(model_id)

    @app.post("/v1/models/{model_id}/predict")
    def model_predict(model_id: str, body: PredictIn):
        model = load_model(store.model_dir(model_id))
        provided = [v is not None for v in (body.image_b64, body.embedding)]
        if sum(provided) != 1:
            raise ValidationError("provide exactly one of image_b64 or embedding")
        if body.embedding is not None:
            if len(body.embedding) != EMBEDDING_DIM:
                raise ValidationError(
                    f"embedding length must be {EMBEDDING_DIM}, got {len(body.embedding)}"
                )
            vector = np.asarray(body.embedding, dtype=np.float64)
        else:
            try:
                payload = base64.b64decode(body.image_b64, validate=True)
            except Exception as exc:
                raise ValidationError(f"image_b64 is not valid base64: {exc}") from None
            vector = np.asarray(backend_set.embedder.embed(payload), dtype=np.float64)
        probs, labels = predict(model, vector.reshape(1, -1))
        label_index = int(labels[0])
        return {
            "probabilities": {
                name: float(p) for name, p in zip(model.class_names, probs[0])
            },
            "label": model.class_names[label_index],
        }

    # -- jobs

    @app.get("/v1/jobs/{job_id}")
    def job_status(job_id: str):
        return manager.status(job_id).to_json_dict()

    @app.post("/v1/jobs/{job_id}/cancel")
    def job_cancel(job_id: str):
        return manager.cancel(job_id).to_json_dict()

    @app.get("/v1/jobs/{job_id}/events")
    def job_events(job_id: str):
        manager.status(job_id)  # 404 before the stream starts

        def stream():
            index = 0
            while True:
                event = manager.wait_event(job_id, index, timeout=heartbeat_seconds)
                if event is None:
                    state = manager.status(job_id)
                    if state.status.value in TERMINAL_STAGES and index >= len(
                        manager.events(job_id)
                    ):
                        break
                    yield json.dumps({"heartbeat": True, "job_id": job_id}) + "\n"
                    continue
                index += 1
                yield json.dumps(event, sort_keys=True) + "\n"
                if event.get("stage") in TERMINAL_STAGES:
                    break

        return StreamingResponse(stream(), media_type="application/x-ndjson")

    return app
