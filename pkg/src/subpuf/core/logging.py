"""Structured logging setup for subpuf.

Configures JSON (or console) logging with module-scoped loggers. Logs go to
stderr so that report data written to stdout stays machine-readable.
"""
import logging
import sys
from typing import Optional

import structlog
from structlog.processors import JSONRenderer, TimeStamper
from structlog.stdlib import LoggerFactory, add_log_level

from subpuf.core.config import LoggingSettings


def configure_logging(settings: Optional[LoggingSettings] = None):
    """Configure structured logging for subpuf.

    Args:
        settings: Logging section of the settings; environment-driven
            defaults when omitted.
    """
    settings = settings or LoggingSettings()
    level = getattr(logging, settings.level.upper())

    # force=True so the CLI can reconfigure after loading its config file
    logging.basicConfig(
        format="%(message)s",
        stream=sys.stderr,
        level=level,
        force=True,
    )
    # structlog drops events below the most verbose level in use; stdlib
    # applies the per-component levels after that
    floor = level
    for name, component_level in settings.component_levels.items():
        numeric = getattr(logging, component_level.upper())
        logging.getLogger(name).setLevel(numeric)
        floor = min(floor, numeric)

    shared_processors: list = [
        add_log_level,
        TimeStamper(fmt="iso"),
        structlog.stdlib.ExtraAdder(),
    ]

    if settings.format == "json":
        processors = shared_processors + [JSONRenderer(sort_keys=True)]
    else:
        processors = shared_processors + [structlog.dev.ConsoleRenderer()]

    structlog.configure(
        processors=processors,
        context_class=dict,
        logger_factory=LoggerFactory(),
        wrapper_class=structlog.make_filtering_bound_logger(floor),
        cache_logger_on_first_use=False,
    )


def get_logger(name: str, **context) -> structlog.stdlib.BoundLogger:
    """Get a structured logger with component context.

    Args:
        name: Logger name (typically __name__)
        **context: Additional context to bind to all log messages

    Returns:
        BoundLogger: Configured structured logger
    """
    logger = structlog.get_logger(name)

    if context:
        logger = logger.bind(**context)

    return logger


def bind_chip(logger: structlog.stdlib.BoundLogger, chip_id: str, seed: int):
    """Bind chip identity to the logger.

    Args:
        logger: The logger instance
        chip_id: Chip identifier
        seed: Chip seed

    Returns:
        BoundLogger: Logger with chip identity bound
    """
    return logger.bind(chip_id=chip_id, seed=seed)


# Initialize logging on module import
configure_logging()
