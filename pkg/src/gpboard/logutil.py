"""The ``gpboard`` logger.

Enumeration, reduction and verification code logs counts and fallbacks
through :func:`get_logger`. The logger starts at WARNING and the CLI raises
it with ``-v``/``-vv``; a host that already attached handlers keeps them.
"""
from __future__ import annotations

import logging
from typing import Optional

LOGGER_NAME = "gpboard"
LOG_FORMAT = "[%(name)s] %(levelname)s: %(message)s"

_LOGGER: Optional[logging.Logger] = None


def _attach_stderr(logger: logging.Logger) -> None:
    handler = logging.StreamHandler()
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    logger.addHandler(handler)


def get_logger() -> logging.Logger:
    global _LOGGER
    if _LOGGER is None:
        logger = logging.getLogger(LOGGER_NAME)
        if not logger.handlers:
            _attach_stderr(logger)
        logger.setLevel(logging.WARNING)
        _LOGGER = logger
    return _LOGGER


def set_verbosity(count: int) -> None:
    """``-v`` selects INFO (check timings), ``-vv`` DEBUG (map and class counts)."""
    if count <= 0:
        return
    get_logger().setLevel(logging.INFO if count == 1 else logging.DEBUG)


__all__ = ["LOGGER_NAME", "get_logger", "set_verbosity"]
