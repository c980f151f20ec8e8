"""
Logging setup and structured operation helpers
"""

import logging
from typing import Any

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def configure_logging(level: str = "INFO") -> None:
    logging.basicConfig(level=level.upper(), format=LOG_FORMAT)


def _context(**context: Any) -> str:
    return " ".join(f"{key}={value}" for key, value in context.items() if value is not None)


def log_operation_start(logger: logging.Logger, operation: str, **context: Any) -> None:
    logger.info("%s started %s", operation, _context(**context))


def log_operation_success(logger: logging.Logger, operation: str, **context: Any) -> None:
    logger.info("%s succeeded %s", operation, _context(**context))


def log_operation_error(logger: logging.Logger, operation: str, error: Exception, **context: Any) -> None:
    code = getattr(error, "code", type(error).__name__)
    logger.warning("%s failed code=%s error=%s %s", operation, code, error, _context(**context))
