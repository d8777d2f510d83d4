"""Runtime defaults read from the environment (.env supported)."""

import logging
import os

from dotenv import load_dotenv

load_dotenv()

DEFAULT_QUAD = "128x256"
DEFAULT_NESTED_BUDGET = 2 ** 25


def get_log_level():
    name = os.getenv("LAB_LOG_LEVEL", "INFO").upper()
    return getattr(logging, name, logging.INFO)


def get_log_dir():
    return os.getenv("LAB_LOG_DIR", "logs")


def log_to_file():
    return os.getenv("LAB_LOG_TO_FILE", "1").strip().lower() not in ("0", "false", "no", "")


def get_threads():
    return max(1, int(os.getenv("LAB_THREADS", "1")))


def get_eigensolver():
    return os.getenv("LAB_EIGENSOLVER", "lapack").strip().lower()


def get_default_quad():
    return os.getenv("LAB_QUAD", DEFAULT_QUAD)


def get_nested_budget():
    return int(os.getenv("LAB_NESTED_BUDGET", str(DEFAULT_NESTED_BUDGET)))
