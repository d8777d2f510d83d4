import logging
from datetime import datetime
from pathlib import Path

from src.utils.settings import get_log_dir, get_log_level, log_to_file

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"


def _attach(logger, handler, level):
    handler.setLevel(level)
    handler.setFormatter(logging.Formatter(LOG_FORMAT, datefmt=DATE_FORMAT))
    logger.addHandler(handler)


def setup_logger(name, log_file=None, level=None):
    """Logger with a stderr handler and, when LAB_LOG_TO_FILE allows it, a file under LAB_LOG_DIR"""
    logger = logging.getLogger(name)
    level = get_log_level() if level is None else level
    logger.setLevel(level)

    # Configured once per name
    if logger.handlers:
        return logger

    # stderr: CSV results own stdout
    _attach(logger, logging.StreamHandler(), level)

    if log_to_file():
        directory = Path(get_log_dir())
        directory.mkdir(parents=True, exist_ok=True)
        if log_file is None:
            log_file = f"{name}_{datetime.now():%Y%m%d_%H%M%S}.log"
        _attach(logger, logging.FileHandler(directory / log_file), level)

    logger.propagate = False
    return logger


def get_main_logger():
    """Logger of the command-line entry point"""
    return setup_logger("norming_lab", "main.log")


def get_module_logger(module_name):
    """Logger of one model or experiment module"""
    return setup_logger(f"lab_{module_name}", f"lab_{module_name}.log")


def log_function_call(logger, func_name, *args, **kwargs):
    """Entry of a public operation at INFO, its arguments at DEBUG"""
    logger.info(f"Calling function: {func_name}")
    if args or kwargs:
        logger.debug(f"{func_name} args={args} kwargs={kwargs}")


def log_result(logger, name, **values):
    """Computed constants of one operation"""
    rendered = ", ".join(f"{key}={value:.6g}" if isinstance(value, float) else f"{key}={value}"
                         for key, value in values.items())
    logger.info(f"{name} -> {rendered}")
