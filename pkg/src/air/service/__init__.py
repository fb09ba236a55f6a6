"""HTTP facade over the pipeline, filter, and trainer."""

from air.service.app import create_app

__all__ = ["create_app"]
