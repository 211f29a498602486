"""
Logger configuration using loguru
"""
import logging
import os
import sys
from pathlib import Path

from loguru import logger

# Remove default logger
logger.remove()

LOG_LEVEL = os.getenv("BINPLAY_LOG_LEVEL", "INFO")
LOG_DIR = os.getenv("BINPLAY_LOG_DIR")


class InterceptHandler(logging.Handler):
    def emit(self, record):
        try:
            level = logger.level(record.levelname).name
        except ValueError:
            level = record.levelno

        frame, depth = logging.currentframe(), 2
        while frame and frame.f_code.co_filename == logging.__file__:
            frame = frame.f_back
            depth += 1

        logger.opt(depth=depth, exception=record.exc_info).log(
            level, record.getMessage()
        )


logging.basicConfig(handlers=[InterceptHandler()], level=0)

# Console logging format
console_format = (
    "<green>{time:YYYY-MM-DD HH:mm:ss}</green> | "
    "<level>{level: <8}</level> | "
    "<cyan>{name}</cyan>:<cyan>{function}</cyan>:<cyan>{line}</cyan> | "
    "<level>{message}</level>"
)

# File logging format (more detailed)
file_format = (
    "{time:YYYY-MM-DD HH:mm:ss} | "
    "{level: <8} | "
    "{name}:{function}:{line} | "
    "{message} | "
    "{extra}"
)

# Console goes to stderr: stdout carries command output (codes, reports)
logger.add(
    sys.stderr,
    format=console_format,
    level=LOG_LEVEL,
    colorize=True,
    backtrace=False,
    diagnose=False,
)

if LOG_DIR:
    log_dir = Path(LOG_DIR)
    log_dir.mkdir(parents=True, exist_ok=True)

    logger.add(
        log_dir / "binplay_{time:YYYY-MM-DD}.log",
        format=file_format,
        level=LOG_LEVEL,
        rotation="00:00",
        retention="30 days",
        compression="zip",
        backtrace=True,
        diagnose=True,
        enqueue=True,
    )

    logger.add(
        log_dir / "errors_{time:YYYY-MM-DD}.log",
        format=file_format,
        level="ERROR",
        rotation="00:00",
        retention="90 days",
        compression="zip",
        backtrace=True,
        diagnose=True,
        enqueue=True,
    )


def add_run_sink(run_dir: Path, level: str = "DEBUG") -> int:
    """
    Attach a file sink writing into <run_dir>/logs/run.log

    Returns:
        The loguru handler id, to pass to ``logger.remove`` when the run ends
    """
    path = Path(run_dir) / "logs" / "run.log"
    path.parent.mkdir(parents=True, exist_ok=True)
    return logger.add(path, format=file_format, level=level, backtrace=True, diagnose=False)


__all__ = ["logger", "add_run_sink", "InterceptHandler"]
