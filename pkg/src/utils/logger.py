"""
Centralized Logging Configuration.

setup_logging configures the main process to log to a daily file and the console.
Worker processes of a parallel batch get console-only logging through
configure_worker_logging, and per-run messages carry their policy and run id through
run_logger.
"""

import logging
import sys
from datetime import datetime
from pathlib import Path
from typing import Any, MutableMapping, Tuple, Union

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
WORKER_FORMAT = "%(asctime)s - %(processName)s - %(name)s - %(levelname)s - %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"

# PDF export pulls these in; they log every font subset at INFO
QUIET_LOGGERS = ("fpdf", "fontTools")


def _as_level(log_level: Union[int, str]) -> int:
    if isinstance(log_level, str):
        level = logging.getLevelName(log_level.upper())
        if not isinstance(level, int):
            raise ValueError(f"Unknown log level '{log_level}'")
        return level
    return log_level


def setup_logging(
    log_level: Union[int, str] = logging.INFO,
    log_dir: str = "logs",
    log_file_prefix: str = "contract_lab"
) -> Path:
    """
    Route the root logger to a daily log file and stdout, replacing earlier handlers.

    Args:
        log_level: numeric level or a name such as "DEBUG"
        log_dir: directory of the daily files, created if missing
        log_file_prefix: file name stem, the date is appended

    Returns:
        Path: the log file in use
    """
    level = _as_level(log_level)
    log_path = Path(log_dir) / f"{log_file_prefix}_{datetime.now():%Y%m%d}.log"
    log_path.parent.mkdir(parents=True, exist_ok=True)

    formatter = logging.Formatter(LOG_FORMAT, DATE_FORMAT)
    handlers = [logging.FileHandler(log_path, encoding='utf-8'), logging.StreamHandler(sys.stdout)]
    for handler in handlers:
        handler.setFormatter(formatter)
    logging.basicConfig(level=level, handlers=handlers, force=True)

    for name in QUIET_LOGGERS:
        logging.getLogger(name).setLevel(max(level, logging.WARNING))

    logging.getLogger(__name__).debug("Logging to %s at %s", log_path, logging.getLevelName(level))
    return log_path


def configure_worker_logging(log_level: Union[int, str] = logging.WARNING) -> None:
    """
    Process-pool initializer: stderr-only logging at the parent's level.

    Forked workers inherit the parent's handlers and only get their level reset.
    """
    root = logging.getLogger()
    if not root.handlers:
        logging.basicConfig(format=WORKER_FORMAT, datefmt=DATE_FORMAT, stream=sys.stderr)
    root.setLevel(_as_level(log_level))


class RunLoggerAdapter(logging.LoggerAdapter):
    """Prefixes every message with the policy and run id it belongs to."""

    def process(self, msg: Any, kwargs: MutableMapping[str, Any]) -> Tuple[Any, MutableMapping]:
        return f"[{self.extra['policy']} run {self.extra['run_id']}] {msg}", kwargs


def run_logger(name: str, policy: str, run_id: int) -> RunLoggerAdapter:
    """Logger for messages about one seeded run."""
    return RunLoggerAdapter(logging.getLogger(name), {'policy': policy, 'run_id': run_id})


def get_logger(name: str) -> logging.Logger:
    return logging.getLogger(name)
