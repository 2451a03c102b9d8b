"""
Django settings for gaugeforms_project project.

Generated by 'django-admin startproject' using Django 5.2.6.

For more information on this file, see
https://docs.djangoproject.com/en/5.2/topics/settings/

For the full list of settings and their values, see
https://docs.djangoproject.com/en/5.2/ref/settings/
"""

from pathlib import Path
import os
from dotenv import load_dotenv
load_dotenv()


# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = os.getenv("SECRET_KEY", "gaugeforms-development-key")

# SECURITY WARNING: don't run with debug turned on in production!
DEBUG = os.getenv("DEBUG", "False").lower() == "true"

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    "django.contrib.contenttypes",
    "django.contrib.auth",
    "rest_framework",
    "gaugeforms.apps.GaugeformsConfig",
]


# Database
# Nothing is persisted; the test runner still expects a configured backend.

DATABASES = {
    "default": {
        "ENGINE": "django.db.backends.sqlite3",
        "NAME": BASE_DIR / "db.sqlite3",
    }
}


# Internationalization
# https://docs.djangoproject.com/en/5.2/topics/i18n/

LANGUAGE_CODE = "en-us"

TIME_ZONE = "UTC"

USE_I18N = True

USE_TZ = True

DEFAULT_AUTO_FIELD = "django.db.models.BigAutoField"


# Numerics

GAUGEFORMS_THREADS = max(1, int(os.getenv("GAUGEFORMS_THREADS", os.cpu_count() or 1)))

GAUGEFORMS_TOLERANCE_DEFAULTS = {
    "hermitian": 1e-12,
    "degenerate": 1e-10,
    "trace": 1e-12,
    "symmetric": 1e-12,
    "inverse": 1e-10,
    "residual_potential": 1e-8,
    "imaginary": 1e-10,
    "charge": 1e-9,
    "timelike": 1e-10,
    "orthonormal": 1e-9,
    "group": 1e-9,
    "lift": 1e-8,
    "closure": 1e-6,
    "gauge": 1e-10,
    "metric": 1e-9,
    "conformal": 1e-8,
    "closed": 1e-8,
    "period": 1e-8,
    "potential": 1e-8,
    "reconstruction": 1e-7,
}

GAUGEFORMS_TOLERANCES = {
    name: float(os.getenv(f"GAUGEFORMS_TOL_{name.upper()}", default))
    for name, default in GAUGEFORMS_TOLERANCE_DEFAULTS.items()
}


# Logging
# Reports go to stdout, so everything logged goes to stderr.

GAUGEFORMS_LOG_LEVEL = os.getenv("GAUGEFORMS_LOG_LEVEL", "INFO").upper()

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "plain": {"format": "%(levelname)s %(name)s: %(message)s"},
    },
    "handlers": {
        "stderr": {
            "class": "logging.StreamHandler",
            "stream": "ext://sys.stderr",
            "formatter": "plain",
        },
    },
    "loggers": {
        "gaugeforms": {
            "handlers": ["stderr"],
            "level": GAUGEFORMS_LOG_LEVEL,
            "propagate": False,
        },
    },
}

REST_FRAMEWORK = {
    "STRICT_JSON": True,
    "COERCE_DECIMAL_TO_STRING": False,
}
