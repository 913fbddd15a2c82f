import os

from celery import Celery

os.environ.setdefault("DJANGO_SETTINGS_MODULE", "core.settings")

app = Celery("vuca")

# CELERY_* settings: broker, eager mode, worker concurrency from VUCA_THREADS.
app.config_from_object("django.conf:settings", namespace="CELERY")

# A test point runs for seconds to minutes; hand one to each worker process at a time.
app.conf.worker_prefetch_multiplier = 1
app.conf.task_acks_late = True

app.autodiscover_tasks(["sounding"])
