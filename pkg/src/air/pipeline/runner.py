"""The two dataset-synthesis flows.

Generation: grammar -> combinations -> prompts (rewritten or raw keywords)
-> images (images_per_prompt each) -> embeddings -> filter -> manifest.

Augmentation: source dataset -> one extracted caption per kept image -> one
replicated image per caption (strict 1:1) -> optional style transfer ->
embeddings -> filter -> manifest with the source's classes.

Both flows journal per-item completions under <out>/pending/ so an
interrupted run resumes without redoing finished items, and both are pure
functions of (inputs, config) when backends are mocks: reruns and different
worker counts produce byte-identical dataset directories.
"""

from __future__ import annotations

import base64
import hashlib
import json
from concurrent.futures import FIRST_COMPLETED, ThreadPoolExecutor, wait
from datetime import datetime, timedelta, timezone
from pathlib import Path
from shutil import rmtree
from typing import Any, Callable, Sequence

import numpy as np

from air.backends import BackendSet, as_embedding, caption_image
from air.core.canonical import canonical_json, write_bytes_atomic, write_canonical_json
from air.core.manifest import dataset_write_lock, read_blob, save_manifest, store_blob
from air.core.types import (
    ContextGrammar,
    DatasetManifest,
    FilterVerdict,
    ImageRecord,
    PromptRecord,
    Stage,
)
from air.errors import ValidationError
from air.filtering import FilterReport, filter_dataset
from air.pipeline.config import PipelineConfig
from air.prompts.combinations import enumerate_combinations
from air.prompts.engineer import RewriteRequest, engineer_prompt, simplistic_prompt_record

EmitFn = Callable[[str, float, str], None]
CancelFn = Callable[[], None]

STAGE_ORDER = ("prompts", "generate", "style", "embed", "filter", "persist")


def derive_seed(job_seed: int, prompt_id: str, index: int) -> int:
    digest = hashlib.sha256(f"{job_seed}:{prompt_id}:{index}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def derive_dataset_identity(kind: str, payload: dict[str, Any]) -> tuple[str, str]:
    """Deterministic (dataset_id, created_at) from the run inputs.

    The creation stamp is a logical timestamp derived from the same digest,
    not wall-clock time: identical runs must produce identical bytes.
    """
    digest = hashlib.sha256(f"{kind}\x1f{canonical_json(payload)}".encode("utf-8")).digest()
    dataset_id = f"ds-{digest[:6].hex()}"
    seconds = int.from_bytes(digest[6:10], "little") % 31_536_000
    stamp = datetime(2000, 1, 1, tzinfo=timezone.utc) + timedelta(seconds=seconds)
    return dataset_id, stamp.isoformat()


class _Emitter:
    """Stage-scoped progress: monotone, normalized over the enabled stages."""

    def __init__(
        self,
        stages: Sequence[str],
        emit: EmitFn | None,
        cancel_check: CancelFn | None,
    ) -> None:
        self.stages = list(stages)
        self._emit = emit
        self._cancel = cancel_check
        self._progress = 0.0

    def check(self) -> None:
        if self._cancel is not None:
            self._cancel()

    def emit(self, stage: str, fraction: float, message: str = "") -> None:
        idx = self.stages.index(stage)
        fraction = min(max(fraction, 0.0), 1.0)
        progress = (idx + fraction) / len(self.stages)
        self._progress = max(self._progress, progress)
        if self._emit is not None:
            self._emit(stage, self._progress, message)


class _Journal:
    """Append-only per-item completion records under <out>/pending/."""

    def __init__(self, out_dir: Path) -> None:
        self.dir = out_dir / "pending"
        self.path = self.dir / "journal.jsonl"
        self.entries: dict[tuple[str, str], dict[str, Any]] = {}
        if self.path.exists():
            for line in self.path.read_text("utf-8").splitlines():
                if not line.strip():
                    continue
                raw = json.loads(line)
                self.entries[(raw["kind"], raw["key"])] = raw

    def get(self, kind: str, key: str) -> dict[str, Any] | None:
        return self.entries.get((kind, key))

    def record(self, kind: str, key: str, payload: dict[str, Any]) -> None:
        entry = {"kind": kind, "key": key, **payload}
        self.entries[(kind, key)] = entry
        self.dir.mkdir(parents=True, exist_ok=True)
        with self.path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(entry, sort_keys=True) + "\n")
            fh.flush()

    def clear(self) -> None:
        if self.dir.exists():
            rmtree(self.dir)


def _parallel_map(items, fn, workers: int, emitter: _Emitter, stage: str, on_result=None):
    """Order-preserving map with per-item progress; honors cancellation.

    `on_result` runs in the calling thread as each item completes (journal
    writes stay single-writer even with parallel workers).
    """
    results: list[Any] = [None] * len(items)
    if not items:
        emitter.emit(stage, 1.0, "nothing to do")
        return results
    if workers <= 1 or len(items) == 1:
        for k, item in enumerate(items):
            emitter.check()
            results[k] = fn(item)
            if on_result is not None:
                on_result(results[k])
            emitter.emit(stage, (k + 1) / len(items))
        return results
    done_count = 0
    executor = ThreadPoolExecutor(max_workers=workers)
    try:
        pending = {executor.submit(fn, item): k for k, item in enumerate(items)}
        while pending:
            emitter.check()
            finished, _ = wait(pending, return_when=FIRST_COMPLETED)
            for future in finished:
                result = future.result()
                results[pending.pop(future)] = result
                if on_result is not None:
                    on_result(result)
                done_count += 1
                emitter.emit(stage, done_count / len(items))
    finally:
        executor.shutdown(wait=True, cancel_futures=True)
    return results


def _effective_stages(config: PipelineConfig, with_style: bool) -> list[str]:
    stages = ["prompts", "generate"]
    if with_style:
        stages.append("style")
    stages.append("embed")
    if config.use_filter:
        stages.append("filter")
    stages.append("persist")
    return stages


def _generate_images(
    prompts: Sequence[PromptRecord],
    per_prompt: int,
    config: PipelineConfig,
    backends: BackendSet,
    out_dir: Path,
    journal: _Journal,
    emitter: _Emitter,
) -> list[dict[str, Any]]:
    """One work item per (prompt, index); returns ordered item descriptors."""
    items = [
        {
            "prompt": prompt,
            "index": index,
            "key": f"{prompt.id}:{index}",
            "seed": derive_seed(config.seed, prompt.id, index),
        }
        for prompt in prompts
        for index in range(per_prompt)
    ]

    def produce(item: dict[str, Any]) -> dict[str, Any]:
        cached = journal.get("generate", item["key"])
        if cached is not None:
            return {**item, "blob": cached["blob"]}
        payload = backends.text_to_image.generate(
            item["prompt"], item["seed"], config.image_size
        )
        return {**item, "blob": store_blob(out_dir, payload), "fresh": True}

    def journal_result(item: dict[str, Any]) -> None:
        if item.pop("fresh", False):
            journal.record("generate", item["key"], {"blob": item["blob"], "seed": item["seed"]})

    return _parallel_map(
        items, produce, config.parallelism, emitter, "generate", on_result=journal_result
    )


def _style_images(
    items: list[dict[str, Any]],
    config: PipelineConfig,
    backends: BackendSet,
    out_dir: Path,
    journal: _Journal,
    emitter: _Emitter,
) -> list[dict[str, Any]]:
    def restyle(item: dict[str, Any]) -> dict[str, Any]:
        cached = journal.get("style", item["key"])
        if cached is not None:
            return {**item, "blob": cached["blob"]}
        payload = read_blob(out_dir, item["blob"])
        styled = backends.style_transfer.transfer(payload, config.style_domain)
        return {**item, "blob": store_blob(out_dir, styled), "fresh": True}

    def journal_result(item: dict[str, Any]) -> None:
        if item.pop("fresh", False):
            journal.record("style", item["key"], {"blob": item["blob"]})

    return _parallel_map(
        items, restyle, config.parallelism, emitter, "style", on_result=journal_result
    )


def _embed_images(
    items: list[dict[str, Any]],
    backends: BackendSet,
    out_dir: Path,
    journal: _Journal,
    emitter: _Emitter,
    parallelism: int,
) -> list[dict[str, Any]]:
    def embed(item: dict[str, Any]) -> dict[str, Any]:
        cached = journal.get("embed", item["key"])
        if cached is not None:
            raw = base64.b64decode(cached["embedding_b64"])
            vector = np.frombuffer(raw, dtype="<f4")
            return {**item, "embedding": tuple(float(v) for v in vector)}
        vec = backends.embedder.embed(read_blob(out_dir, item["blob"]))
        embedding = as_embedding(vec)
        encoded = base64.b64encode(
            np.asarray(embedding, dtype="<f4").tobytes()
        ).decode("ascii")
        return {**item, "embedding": embedding, "embedding_b64": encoded, "fresh": True}

    def journal_result(item: dict[str, Any]) -> None:
        if item.pop("fresh", False):
            journal.record("embed", item["key"], {"embedding_b64": item.pop("embedding_b64")})

    return _parallel_map(
        items, embed, parallelism, emitter, "embed", on_result=journal_result
    )


def _prompts_jsonl(manifest: DatasetManifest) -> bytes:
    lines = []
    for prompt in manifest.prompts:
        lines.append(
            canonical_json(
                {
                    "id": prompt.id,
                    "text": prompt.text(),
                    "source": prompt.source.value,
                    "class_label": prompt.class_label,
                    "combination": prompt.combination.to_json_dict()
                    if prompt.combination
                    else None,
                }
            )
        )
    return ("\n".join(lines) + "\n" if lines else "").encode("utf-8")


def _finish(
    manifest: DatasetManifest,
    config: PipelineConfig,
    out_dir: Path,
    journal: _Journal,
    emitter: _Emitter,
) -> DatasetManifest:
    report: FilterReport | None = None
    if config.use_filter:
        emitter.emit("filter", 0.0, "filtering")
        manifest, report = filter_dataset(manifest, config.filter)
        emitter.emit("filter", 1.0, "filtered")
    else:
        manifest = manifest.with_verdicts(
            {img.id: FilterVerdict.KEPT for img in manifest.images}
        )
    emitter.emit("persist", 0.0, "writing manifest")
    with dataset_write_lock(out_dir):
        save_manifest(manifest, out_dir)
        write_bytes_atomic(out_dir / "prompts.jsonl", _prompts_jsonl(manifest))
        if report is not None:
            write_canonical_json(out_dir / "filter_report.json", report.to_json_dict())
    journal.clear()
    emitter.emit("persist", 1.0, "done")
    return manifest


def _records_from_items(
    items: list[dict[str, Any]], styled: bool
) -> tuple[ImageRecord, ...]:
    history = (Stage.GENERATED, Stage.STYLE_TRANSFERRED) if styled else (Stage.GENERATED,)
    records = []
    for item in items:
        prompt: PromptRecord = item["prompt"]
        image_id = "img-" + hashlib.sha256(
            f"{prompt.id}:{item['index']}:{item['seed']}".encode("utf-8")
        ).hexdigest()[:12]
        records.append(
            ImageRecord(
                id=image_id,
                class_label=prompt.class_label,
                image_ref=item["blob"],
                embedding=item["embedding"],
                prompt_id=prompt.id,
                seed=item["seed"],
                stage_history=history,
                filter_verdict=FilterVerdict.PENDING,
            )
        )
    return tuple(records)


def run_air_gen(
    grammar: ContextGrammar,
    config: PipelineConfig,
    backends: BackendSet,
    out_dir: Path | str,
    dataset_id: str | None = None,
    name: str = "",
    created_at: str | None = None,
    emit: EmitFn | None = None,
    cancel_check: CancelFn | None = None,
) -> DatasetManifest:
    """Synthesize a dataset from a context grammar."""
    if backends.max_parallel is not None and config.parallelism > backends.max_parallel:
        raise ValidationError(
            f"parallelism {config.parallelism} exceeds backend limit {backends.max_parallel}"
        )
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if dataset_id is None or created_at is None:
        derived_id, derived_stamp = derive_dataset_identity(
            "air_gen", {"grammar": grammar.to_json_dict(), "config": config.content_dict()}
        )
        dataset_id = dataset_id or derived_id
        created_at = created_at or derived_stamp

    emitter = _Emitter(_effective_stages(config, config.use_style_transfer), emit, cancel_check)
    journal = _Journal(out_dir)

    combos = enumerate_combinations(grammar)
    prompts: list[PromptRecord] = []
    for k, combo in enumerate(combos):
        emitter.check()
        if config.use_rewriter:
            record = engineer_prompt(RewriteRequest(combination=combo), backends.rewriter)
        else:
            record = simplistic_prompt_record(combo)
        prompts.append(record)
        emitter.emit("prompts", (k + 1) / len(combos), record.id)

    items = _generate_images(
        prompts, config.images_per_prompt, config, backends, out_dir, journal, emitter
    )
    if config.use_style_transfer:
        items = _style_images(items, config, backends, out_dir, journal, emitter)
    items = _embed_images(items, backends, out_dir, journal, emitter, config.parallelism)

    manifest = DatasetManifest(
        dataset_id=dataset_id,
        name=name or f"generated {dataset_id}",
        classes=grammar.class_labels(),
        prompts=tuple(prompts),
        images=_records_from_items(items, styled=config.use_style_transfer),
        grammar=grammar,
        created_at=created_at,
        pipeline_config={
            "kind": "air_gen",
            "backends": backends.describe(),
            "config": config.content_dict(),
        },
    )
    return _finish(manifest, config, out_dir, journal, emitter)


def run_air_aug(
    source: DatasetManifest,
    source_dir: Path | str,
    config: PipelineConfig,
    backends: BackendSet,
    out_dir: Path | str,
    dataset_id: str | None = None,
    name: str = "",
    created_at: str | None = None,
    emit: EmitFn | None = None,
    cancel_check: CancelFn | None = None,
) -> DatasetManifest:
    """Replicate a dataset 1:1 from captions extracted off its kept images."""
    if backends.max_parallel is not None and config.parallelism > backends.max_parallel:
        raise ValidationError(
            f"parallelism {config.parallelism} exceeds backend limit {backends.max_parallel}"
        )
    source_dir = Path(source_dir)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    kept = source.kept_images()
    if not kept:
        raise ValidationError("source dataset has no kept images to replicate")
    if dataset_id is None or created_at is None:
        derived_id, derived_stamp = derive_dataset_identity(
            "air_aug",
            {"source": source.dataset_id, "config": config.content_dict()},
        )
        dataset_id = dataset_id or derived_id
        created_at = created_at or derived_stamp

    emitter = _Emitter(_effective_stages(config, config.use_style_transfer), emit, cancel_check)
    journal = _Journal(out_dir)

    prompts: list[PromptRecord] = []
    for k, record in enumerate(kept):
        emitter.check()
        payload = read_blob(source_dir, record.image_ref)
        prompt = caption_image(
            backends.captioner, payload, class_label=record.class_label, record_key=record.id
        )
        prompts.append(prompt)
        emitter.emit("prompts", (k + 1) / len(kept), prompt.id)

    # replication is strictly one generated image per extracted prompt
    items = _generate_images(prompts, 1, config, backends, out_dir, journal, emitter)
    if config.use_style_transfer:
        items = _style_images(items, config, backends, out_dir, journal, emitter)
    items = _embed_images(items, backends, out_dir, journal, emitter, config.parallelism)

    manifest = DatasetManifest(
        dataset_id=dataset_id,
        name=name or f"{source.name} replicated",
        classes=source.classes,
        prompts=tuple(prompts),
        images=_records_from_items(items, styled=config.use_style_transfer),
        grammar=None,
        created_at=created_at,
        pipeline_config={
            "kind": "air_aug",
            "source_dataset_id": source.dataset_id,
            "backends": backends.describe(),
            "config": config.content_dict(),
        },
    )
    return _finish(manifest, config, out_dir, journal, emitter)
