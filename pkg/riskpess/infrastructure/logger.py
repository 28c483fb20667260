"""
Structured logging.

Provides structured log records with:
- JSON or text output
- run id tracking (one id per command or experiment)
- level filtering
- rotating log files

Results are written by the renderer; logs carry progress and diagnostics only
and go to stderr so that command output on stdout stays machine-readable.
"""

import json
import logging
import sys
import traceback
from datetime import datetime
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Any, Dict, Optional


class StructuredLogger:
    """Structured logger.

    Attributes:
        name: logger name
        run_id: current run id, attached to every record
        logger: underlying stdlib logger
    """

    def __init__(
        self,
        name: str,
        log_level: str = "INFO",
        log_format: str = "json",
        log_file: Optional[str] = None,
        max_bytes: int = 10485760,  # 10MB
        backup_count: int = 5,
        stream=None,
    ):
        """Create the logger.

        Args:
            name: logger name
            log_level: DEBUG, INFO, WARNING, ERROR or CRITICAL
            log_format: json or text
            log_file: optional file path (rotating); stderr otherwise
            max_bytes: rotation size in bytes
            backup_count: number of rotated files kept
            stream: stream for the console handler (defaults to stderr)
        """
        self.name = name
        self.log_format = log_format
        self.run_id: Optional[str] = None

        self.logger = logging.getLogger(name)
        self.logger.setLevel(getattr(logging, log_level.upper()))
        self.logger.propagate = False

        # avoid duplicate handlers when a name is reused
        self.logger.handlers.clear()

        if log_file:
            log_path = Path(log_file)
            log_path.parent.mkdir(parents=True, exist_ok=True)
            handler = RotatingFileHandler(
                log_file,
                maxBytes=max_bytes,
                backupCount=backup_count,
            )
        else:
            handler = logging.StreamHandler(stream or sys.stderr)

        if log_format == "json":
            handler.setFormatter(self._JsonFormatter())
        else:
            handler.setFormatter(logging.Formatter(
                "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
            ))

        self.logger.addHandler(handler)

    def set_run_id(self, run_id: str):
        """Set the run id attached to subsequent records."""
        self.run_id = run_id

    def log(self, level: str, message: str, **kwargs):
        """Log ``message`` at ``level`` with keyword context."""
        if self.run_id:
            kwargs["run_id"] = self.run_id
        log_method = getattr(self.logger, level.lower())
        log_method(message, extra={"context": kwargs})

    def debug(self, message: str, **kwargs):
        self.log("DEBUG", message, **kwargs)

    def info(self, message: str, **kwargs):
        self.log("INFO", message, **kwargs)

    def warning(self, message: str, **kwargs):
        self.log("WARNING", message, **kwargs)

    def error(self, message: str, **kwargs):
        self.log("ERROR", message, **kwargs)

    def critical(self, message: str, **kwargs):
        self.log("CRITICAL", message, **kwargs)

    def log_error(self, error: BaseException, context: Optional[Dict] = None):
        """Log an exception with its type, message and traceback."""
        context = dict(context or {})
        context.update({
            "error_type": type(error).__name__,
            "error_message": str(error),
            "traceback": traceback.format_exc(),
        })
        self.error("Exception occurred", **context)

    def log_event(self, event_type: str, message: str, **kwargs):
        """Log a lifecycle event (e.g. "command_start", "experiment_done")."""
        self.info(message, event_type=event_type, **kwargs)

    def log_progress(self, stage: str, done: int, total: int, **kwargs):
        """Log progress of a long-running loop."""
        self.debug(
            "Progress",
            stage=stage,
            done=done,
            total=total,
            fraction=round(done / total, 4) if total else 1.0,
            **kwargs,
        )

    class _JsonFormatter(logging.Formatter):
        """JSON formatter."""

        def format(self, record: logging.LogRecord) -> str:
            log_data: Dict[str, Any] = {
                "timestamp": datetime.now().astimezone().isoformat(),
                "level": record.levelname,
                "logger": record.name,
                "message": record.getMessage(),
            }

            if hasattr(record, "context"):
                log_data.update(record.context)

            if record.exc_info:
                log_data["exception"] = self.formatException(record.exc_info)

            return json.dumps(log_data, ensure_ascii=False, default=str)


def create_logger(name: str, config: Optional[Dict] = None) -> StructuredLogger:
    """Factory building a ``StructuredLogger`` from a config dict.

    Args:
        name: logger name
        config: dict with optional log_level, log_format, log_file

    Returns:
        StructuredLogger instance
    """
    config = config or {}

    return StructuredLogger(
        name=name,
        log_level=config.get("log_level", "INFO"),
        log_format=config.get("log_format", "json"),
        log_file=config.get("log_file"),
        max_bytes=config.get("max_bytes", 10485760),
        backup_count=config.get("backup_count", 5),
    )
