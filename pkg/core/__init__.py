"""VUCA channel sounding project. Loading the Celery app here registers ``sounding.tasks``."""

from .celery import app as celery_app

__all__ = ["celery_app"]
