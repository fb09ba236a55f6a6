"""FIFO job queue with progress events, cancellation, and event streaming.

Jobs run on a small worker pool. Each job owns its state; readers take
snapshots. Cancellation is cooperative: it takes effect at the next stage or
item boundary inside the running flow. Terminal states never change, and
every event is appended both to an in-memory log (for streaming reads) and,
when a data directory is configured, to `jobs/<id>/events.jsonl`.
"""

from __future__ import annotations

import json
import queue
import threading
import time
import uuid
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Any, Callable

from air.errors import NotFoundError


class JobKind(str, Enum):
    AIR_GEN = "air_gen"
    AIR_AUG = "air_aug"
    TRAIN = "train"
    CROSS_VALIDATE = "cross_validate"


class JobStatus(str, Enum):
    QUEUED = "queued"
    RUNNING = "running"
    SUCCEEDED = "succeeded"
    FAILED = "failed"
    CANCELLED = "cancelled"


TERMINAL = (JobStatus.SUCCEEDED, JobStatus.FAILED, JobStatus.CANCELLED)


class JobCancelled(Exception):
    """Raised inside a job body when cancellation was requested."""


@dataclass(frozen=True)
class JobState:
    job_id: str
    kind: JobKind
    status: JobStatus
    stage: str = ""
    progress: float = 0.0
    started_at: str | None = None
    finished_at: str | None = None
    error: str | None = None
    result: dict[str, Any] = field(default_factory=dict)

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "job_id": self.job_id,
            "kind": self.kind.value,
            "status": self.status.value,
            "stage": self.stage,
            "progress": self.progress,
            "started_at": self.started_at,
            "finished_at": self.finished_at,
            "error": self.error,
            "result": dict(self.result),
        }


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="milliseconds")


class _Job:
    def __init__(self, job_id: str, kind: JobKind, body: Callable[["JobHandle"], dict[str, Any]]):
        self.state = JobState(job_id=job_id, kind=kind, status=JobStatus.QUEUED)
        self.body = body
        self.cancel_requested = threading.Event()
        self.events: list[dict[str, Any]] = []
        self.condition = threading.Condition()


class JobHandle:
    """Passed into job bodies: progress emission plus cancellation checks."""

    def __init__(self, manager: "JobManager", job: _Job) -> None:
        self._manager = manager
        self._job = job
        self.job_id = job.state.job_id

    def emit(
        self,
        stage: str,
        progress: float,
        message: str = "",
        data: dict[str, Any] | None = None,
    ) -> None:
        self._manager._record_event(self._job, stage, progress, message, data)

    def check_cancelled(self) -> None:
        if self._job.cancel_requested.is_set():
            raise JobCancelled(self.job_id)


class JobManager:
    def __init__(self, worker_count: int = 2, data_dir: Path | str | None = None) -> None:
        self._jobs: dict[str, _Job] = {}
        self._lock = threading.Lock()
        self._queue: "queue.Queue[str]" = queue.Queue()
        self._data_dir = Path(data_dir) if data_dir is not None else None
        self._workers = [
            threading.Thread(target=self._worker_loop, name=f"air-job-worker-{k}", daemon=True)
            for k in range(max(1, worker_count))
        ]
        for worker in self._workers:
            worker.start()

    # -- public API

    def submit(self, kind: JobKind, body: Callable[[JobHandle], dict[str, Any]]) -> str:
        job_id = f"job-{uuid.uuid4().hex[:12]}"
        job = _Job(job_id, kind, body)
        with self._lock:
            self._jobs[job_id] = job
        self._queue.put(job_id)
        return job_id

    def status(self, job_id: str) -> JobState:
        return self._get(job_id).state

    def cancel(self, job_id: str) -> JobState:
        job = self._get(job_id)
        with job.condition:
            if job.state.status in TERMINAL:
                return job.state
            job.cancel_requested.set()
            if job.state.status is JobStatus.QUEUED:
                self._finish(job, JobStatus.CANCELLED, error="cancelled before start")
        return job.state

    def events(self, job_id: str) -> list[dict[str, Any]]:
        job = self._get(job_id)
        with job.condition:
            return list(job.events)

    def wait_event(self, job_id: str, index: int, timeout: float) -> dict[str, Any] | None:
        """Event at `index`, blocking up to `timeout`; None on timeout."""
        job = self._get(job_id)
        deadline = time.monotonic() + timeout
        with job.condition:
            while len(job.events) <= index:
                remaining = deadline - time.monotonic()
                if remaining <= 0 or job.state.status in TERMINAL:
                    break
                job.condition.wait(remaining)
            if len(job.events) > index:
                return job.events[index]
            return None

    def wait(self, job_id: str, timeout: float = 120.0) -> JobState:
        """Block until the job reaches a terminal state (testing convenience)."""
        deadline = time.monotonic() + timeout
        job = self._get(job_id)
        with job.condition:
            while job.state.status not in TERMINAL:
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    raise TimeoutError(f"job {job_id} did not finish within {timeout}s")
                job.condition.wait(remaining)
            return job.state

    def active_dataset_jobs(self, dataset_id: str) -> list[JobState]:
        with self._lock:
            jobs = list(self._jobs.values())
        return [
            j.state
            for j in jobs
            if j.state.status in (JobStatus.QUEUED, JobStatus.RUNNING)
            and j.state.result.get("dataset_id") == dataset_id
        ]

    def tag(self, job_id: str, **fields: Any) -> None:
        """Attach result metadata (dataset/model ids) visible in the state."""
        job = self._get(job_id)
        with job.condition:
            job.state = replace(job.state, result={**job.state.result, **fields})

    # -- internals

    def _get(self, job_id: str) -> _Job:
        with self._lock:
            try:
                return self._jobs[job_id]
            except KeyError:
                raise NotFoundError(f"unknown job id: {job_id}") from None

    def _events_path(self, job_id: str) -> Path | None:
        if self._data_dir is None:
            return None
        path = self._data_dir / "jobs" / job_id
        path.mkdir(parents=True, exist_ok=True)
        return path / "events.jsonl"

    def _append_event(
        self,
        job: _Job,
        stage: str,
        progress: float,
        message: str,
        data: dict[str, Any] | None = None,
    ) -> None:
        """Must hold job.condition: event list, journal file, and state move together."""
        event = {
            "job_id": job.state.job_id,
            "stage": stage,
            "progress": progress,
            "message": message,
            "ts": _now(),
        }
        if data is not None:
            event["data"] = data
        job.events.append(event)
        path = self._events_path(job.state.job_id)
        if path is not None:
            with path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(event, sort_keys=True) + "\n")
        job.condition.notify_all()

    def _record_event(
        self,
        job: _Job,
        stage: str,
        progress: float,
        message: str,
        data: dict[str, Any] | None = None,
    ) -> None:
        with job.condition:
            progress = max(progress, job.state.progress)
            if job.state.status not in TERMINAL:
                job.state = replace(job.state, stage=stage, progress=progress)
            self._append_event(job, stage, progress, message, data)

    def _finish(self, job: _Job, status: JobStatus, error: str | None = None,
                result: dict[str, Any] | None = None) -> None:
        with job.condition:
            if job.state.status in TERMINAL:
                return
            job.state = replace(
                job.state,
                status=status,
                finished_at=_now(),
                error=error,
                result={**job.state.result, **(result or {})},
                progress=1.0 if status is JobStatus.SUCCEEDED else job.state.progress,
            )
            self._append_event(
                job, stage=status.value, progress=job.state.progress,
                message=error or status.value,
            )

    def _worker_loop(self) -> None:
        while True:
            job_id = self._queue.get()
            try:
                job = self._get(job_id)
            except NotFoundError:
                continue
            with job.condition:
                if job.state.status in TERMINAL:  # cancelled while queued
                    continue
                job.state = replace(job.state, status=JobStatus.RUNNING, started_at=_now())
                job.condition.notify_all()
            handle = JobHandle(self, job)
            try:
                result = job.body(handle) or {}
            except JobCancelled:
                self._finish(job, JobStatus.CANCELLED, error="cancelled")
            except Exception as exc:  # job bodies own their validation
                self._finish(job, JobStatus.FAILED, error=f"{type(exc).__name__}: {exc}")
            else:
                self._finish(job, JobStatus.SUCCEEDED, result=result)
