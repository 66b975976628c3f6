"""
Logging setup for the clustering toolkit.

Records go to stderr so that commands printing JSON on stdout stay pipeable.
"""
import logging
import sys
from pathlib import Path
from typing import Optional

DEFAULT_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
PACKAGE_LOGGER = "cad_cluster"


def _parse_level(level: str) -> int:
    value = logging.getLevelName(level.upper())
    if not isinstance(value, int):
        raise ValueError(f"Unknown log level: {level}")
    return value


def _attach(logger: logging.Logger, handler: logging.Handler, formatter: logging.Formatter, level: int):
    handler.setFormatter(formatter)
    handler.setLevel(level)
    logger.addHandler(handler)


def setup_logger(
    name: str,
    level: Optional[str] = None,
    log_file: Optional[Path] = None
) -> logging.Logger:
    """
    Configure and return a logger instance.

    Args:
        name: Logger name
        level: Level name (defaults to settings.log_level)
        log_file: Extra file to log to; with LOG_TO_FILE set, logs/<name>.log is used

    Returns:
        Logger with a stderr handler and, if requested, a file handler
    """
    # settings imports this module, so it may not exist yet
    try:
        from config.settings import settings
    except ImportError:
        settings = None

    level_name = level or (settings.log_level if settings else "INFO")
    log_format = settings.log_format if settings else DEFAULT_FORMAT
    if log_file is None and settings is not None and settings.log_to_file:
        log_file = settings.log_dir / f"{name}.log"

    numeric_level = _parse_level(level_name)
    formatter = logging.Formatter(log_format)

    logger = logging.getLogger(name)
    logger.setLevel(numeric_level)
    logger.handlers.clear()
    logger.propagate = False

    _attach(logger, logging.StreamHandler(sys.stderr), formatter, numeric_level)
    if log_file is not None:
        log_file.parent.mkdir(parents=True, exist_ok=True)
        _attach(logger, logging.FileHandler(log_file), formatter, numeric_level)

    return logger


def set_log_level(level: str, target: Optional[logging.Logger] = None) -> None:
    """Change the level of a logger (the package logger by default) and its handlers."""
    target = target or logger
    numeric_level = _parse_level(level)
    target.setLevel(numeric_level)
    for handler in target.handlers:
        handler.setLevel(numeric_level)


logger = setup_logger(PACKAGE_LOGGER)
