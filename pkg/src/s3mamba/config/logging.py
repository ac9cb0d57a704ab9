"""Logging configuration for s3mamba."""

import logging
from typing import Any

import structlog
from structlog.processors import JSONRenderer
from structlog.processors import TimeStamper
from structlog.stdlib import LoggerFactory

from .settings import settings


def configure_logging() -> None:
    """Configure structured logging for the application."""
    log_level = getattr(logging, settings.log_level.upper(), logging.INFO)

    logging.basicConfig(
        level=log_level,
        format="%(message)s",
        force=True,
    )
    # PIL logs every PNG chunk at DEBUG
    logging.getLogger("PIL").setLevel(max(log_level, logging.INFO))

    structlog.configure(
        processors=[
            structlog.stdlib.filter_by_level,
            structlog.stdlib.add_logger_name,
            structlog.stdlib.add_log_level,
            structlog.stdlib.PositionalArgumentsFormatter(),
            TimeStamper(fmt="iso"),
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            structlog.processors.UnicodeDecoder(),
            JSONRenderer() if settings.is_production else structlog.dev.ConsoleRenderer(),
        ],
        context_class=dict,
        logger_factory=LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=True,
    )


def get_logger(name: str) -> Any:
    """Get a structured logger instance.

    Args:
        name: Logger name (usually __name__)

    Returns:
        Configured structured logger
    """
    return structlog.get_logger(name)


def log_epoch(
    logger: Any,
    epoch: int,
    loss: float,
    lr: float,
    psnr: dict[str, float],
) -> None:
    """Log the summary of one training epoch.

    Args:
        logger: Logger instance
        epoch: One-based number of the epoch that just finished
        loss: Mean L1 training loss over the epoch
        lr: Learning rate used during the epoch
        psnr: Validation PSNR keyed by scale label (may be empty)
    """
    logger.info(
        "epoch_done",
        epoch=epoch,
        loss=loss,
        lr=lr,
        **{f"psnr_{key}": value for key, value in psnr.items()},
    )


def log_check(
    logger: Any,
    name: str,
    passed: bool,
    seconds: float,
    detail: str = "",
) -> None:
    """Log the outcome of one verification check.

    Args:
        logger: Logger instance
        name: Check name
        passed: Whether the check passed
        seconds: Wall time spent in the check
        detail: Short human-readable measurement summary
    """
    log = logger.info if passed else logger.error
    log("check_done", check=name, passed=passed, seconds=round(seconds, 3), detail=detail)
