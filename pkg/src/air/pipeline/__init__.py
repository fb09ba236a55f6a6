"""End-to-end dataset synthesis flows, resumable and observable."""

from air.pipeline.config import PipelineConfig
from air.pipeline.jobs import JobCancelled, JobKind, JobManager, JobState, JobStatus
from air.pipeline.runner import run_air_aug, run_air_gen

__all__ = [
    "PipelineConfig",
    "run_air_gen",
    "run_air_aug",
    "JobManager",
    "JobState",
    "JobStatus",
    "JobKind",
    "JobCancelled",
]
