"""
Django settings for the VUCA sounding project.

The project has no web surface: Django provides configuration, the
management-command CLI (manage.py synth|process|estimate|report|e2e) and the
test runner; Celery runs per-test-point work.

For the full list of settings and their values, see
https://docs.djangoproject.com/en/4.2/ref/settings/
"""

import os, random, string
from pathlib import Path
from dotenv import load_dotenv
from str2bool import str2bool

load_dotenv()  # take environment variables from .env.

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = os.environ.get("SECRET_KEY")
if not SECRET_KEY:
    SECRET_KEY = "".join(random.choice(string.ascii_lowercase) for i in range(32))

# Enable/Disable DEBUG Mode
DEBUG = str2bool(os.environ.get("DEBUG") or "False")

ALLOWED_HOSTS = []

# Application definition

INSTALLED_APPS = [
    # Local apps
    "sounding",
]

# Results are exchanged as files (VIDS, CSV, JSON); nothing is persisted in a database.
DATABASES = {}

USE_TZ = True
TIME_ZONE = "UTC"


# Sounding configuration

# Worker cap for FFT threads and Celery worker processes.
VUCA_THREADS = int(os.environ.get("VUCA_THREADS") or os.cpu_count() or 1)

# Preset used when a command gets neither --preset nor --config.
VUCA_DEFAULT_PRESET = os.environ.get("VUCA_DEFAULT_PRESET", "desk")

VUCA_OUTPUT_DIR = Path(os.environ.get("VUCA_OUTPUT_DIR", BASE_DIR / "output"))

VUCA_SCENARIO_DIR = BASE_DIR / "sounding" / "scenarios"


# Logging

LOG_LEVEL = os.environ.get("LOG_LEVEL", "INFO").upper()

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "plain": {"format": "%(asctime)s %(levelname)s %(name)s: %(message)s"},
    },
    "handlers": {
        "console": {"class": "logging.StreamHandler", "formatter": "plain"},
    },
    "loggers": {
        "sounding": {"handlers": ["console"], "level": LOG_LEVEL, "propagate": False},
        "celery": {"handlers": ["console"], "level": "WARNING"},
    },
}


# Celery Configuration
CELERY_BROKER_URL = os.environ.get("CELERY_BROKER_URL", "redis://redis:6379/0")
CELERY_RESULT_BACKEND = os.environ.get("CELERY_RESULT_BACKEND", "redis://redis:6379/0")
CELERY_ACCEPT_CONTENT = ["application/json"]
CELERY_TASK_SERIALIZER = "json"
CELERY_RESULT_SERIALIZER = "json"
CELERY_TIMEZONE = TIME_ZONE
CELERY_WORKER_CONCURRENCY = VUCA_THREADS

# Without a worker fleet the CLI runs every task in-process.
CELERY_TASK_ALWAYS_EAGER = str2bool(os.environ.get("CELERY_TASK_ALWAYS_EAGER") or "True")
CELERY_TASK_EAGER_PROPAGATES = True
