import logging

from src.core.app_settings import AppSettings

_PACKAGE_LOGGER = "src"


def get_logger(name: str) -> logging.Logger:
    """Get a logger with the given name."""
    return logging.getLogger(name)


def configure_logging(app_settings: AppSettings) -> None:
    """Install a single stream handler on the package logger."""
    logger = logging.getLogger(_PACKAGE_LOGGER)
    logger.setLevel(app_settings.logging.level)
    if not logger.handlers:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(app_settings.logging.format))
        logger.addHandler(handler)
