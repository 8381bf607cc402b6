"""
Django settings for the panoptic_kernels project.

The project carries no database: kernels are pure functions, the command
line and the HTTP surface only read uploads and write files.

For the full list of settings and their values, see
https://docs.djangoproject.com/en/3.0/ref/settings/
"""

import os

# Build paths inside the project like this: os.path.join(BASE_DIR, ...)
BASE_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = os.environ.get("PANOPTIC_KERNELS_DJANGO_KEY", "panoptic-kernels-development-key")

# SECURITY WARNING: don't run with debug turned on in production!
DEBUG = os.environ.get("PANOPTIC_KERNELS_DEBUG", "") not in ("", "0", "false", "False")

ALLOWED_HOSTS = ["localhost", "127.0.0.1", "testserver"]


# Application definition

INSTALLED_APPS = [
    "django.contrib.contenttypes",
    "django.contrib.auth",
    "rest_framework",
    "drf_spectacular",
    "panoptic_kernels.apps.PanopticKernelsConfig",
]

MIDDLEWARE = [
    "django.middleware.security.SecurityMiddleware",
    "django.middleware.common.CommonMiddleware",
]

ROOT_URLCONF = "panoptic_kernels.urls"

WSGI_APPLICATION = "panoptic_kernels.wsgi.application"


# No database is used; Django falls back to its dummy backend.
DATABASES = {}


REST_FRAMEWORK = {
    "DEFAULT_AUTHENTICATION_CLASSES": [],
    "DEFAULT_PERMISSION_CLASSES": [],
    "UNAUTHENTICATED_USER": None,
    "DEFAULT_PARSER_CLASSES": [
        "rest_framework.parsers.MultiPartParser",
        "rest_framework.parsers.FormParser",
        "rest_framework.parsers.JSONParser",
    ],
    "DEFAULT_SCHEMA_CLASS": "drf_spectacular.openapi.AutoSchema",
}

SPECTACULAR_SETTINGS = {
    "TITLE": "Panoptic kernels",
    "DESCRIPTION": "Panoptic-aware convolution and upsampling kernels",
    "VERSION": "0.1.0",
}


def _env_threads():
    value = os.environ.get("PANOPTIC_KERNELS_THREADS")
    if value:
        return int(value)
    return os.cpu_count() or 1


# Library defaults, read through panoptic_kernels.conf.kernel_setting
PANOPTIC_KERNELS = {
    "THREADS": _env_threads(),
    "DTYPE": "float64",
    # output rows per block in the optimized convolution kernel
    "ROW_BLOCK": 16,
    "GENERATOR": {
        "stage_channels": [64, 32, 16],
        "base_height": 8,
        "base_width": 16,
        "num_classes": 8,
        "spade_hidden": 64,
        "seed": 0,
        "dtype": "float64",
        "mode": "panoptic",
    },
    "BENCH": {
        "WARMUP": 2,
        "ITERS": 10,
        "CHECKSUM_RTOL": 1e-12,
    },
    "GRADCHECK": {
        "STEP": 1e-5,
        "TOLERANCE": 1e-5,
    },
}


LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "verbose": {
            "format": "{asctime} {levelname} {name}: {message}",
            "style": "{",
        },
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "verbose",
        },
    },
    "loggers": {
        "panoptic_kernels": {
            "handlers": ["console"],
            "level": os.environ.get("PANOPTIC_KERNELS_LOG_LEVEL", "WARNING"),
        },
    },
}


# Internationalization
# https://docs.djangoproject.com/en/3.0/topics/i18n/

LANGUAGE_CODE = "en-us"

TIME_ZONE = "UTC"

USE_I18N = False

USE_TZ = True

# larger uploads (full-resolution panoptic maps) stay in memory
DATA_UPLOAD_MAX_MEMORY_SIZE = 32 * 1024 * 1024
FILE_UPLOAD_MAX_MEMORY_SIZE = 32 * 1024 * 1024
