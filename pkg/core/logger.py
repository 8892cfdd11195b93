"""
esdv Structured Logging

JSON or key=value logging with context fields, so that a valuation run
(command, line item, parameter, seed) can be traced through the logs.
Logs go to stderr; stdout is reserved for reports.
"""

import json
import logging
import sys
from contextvars import ContextVar, Token
from datetime import datetime, timezone
from typing import Any, Dict, Optional

_context_fields: ContextVar[Dict[str, Any]] = ContextVar("esdv_log_context", default={})

# Fields promoted to the top level of JSON entries
TRACE_FIELDS = ("command", "item_id", "kernel", "parameter", "seed")


def _fields(record: logging.LogRecord) -> Dict[str, Any]:
    fields = dict(_context_fields.get())
    fields.update(getattr(record, "extra_data", None) or {})
    return fields


class JSONFormatter(logging.Formatter):
    """
    One JSON object per line.

    Trace fields (see TRACE_FIELDS) sit next to timestamp, level, logger
    and message; anything else goes under "context".
    """

    def format(self, record: logging.LogRecord) -> str:
        fields = _fields(record)
        entry: Dict[str, Any] = {
            "timestamp": datetime.fromtimestamp(record.created, timezone.utc).isoformat(),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
        }
        for key in TRACE_FIELDS:
            if key in fields:
                entry[key] = fields.pop(key)
        if fields:
            entry["context"] = fields
        if record.exc_info:
            entry["exception"] = self.formatException(record.exc_info)
        return json.dumps(entry, default=str, sort_keys=True)


class TextFormatter(logging.Formatter):
    """`LEVEL logger: message key=value ...` on a single line."""

    def format(self, record: logging.LogRecord) -> str:
        line = f"{record.levelname:<8} {record.name}: {record.getMessage()}"
        fields = _fields(record)
        if fields:
            line += " " + " ".join(f"{key}={fields[key]}" for key in sorted(fields))
        if record.exc_info:
            line += "\n" + self.formatException(record.exc_info)
        return line


class EsdvLogger(logging.Logger):
    """
    Logger that accepts keyword arguments as structured fields.

    Usage:
        logger = get_logger("core.engine")
        logger.info("Item evaluated", item_id="V_W", value=8.04504e9)
    """

    def _log(
        self,
        level: int,
        msg: object,
        args: tuple,
        exc_info: Any = None,
        extra: Optional[Dict[str, Any]] = None,
        stack_info: bool = False,
        stacklevel: int = 1,
        **kwargs: Any,
    ) -> None:
        extra = dict(extra or {})
        if kwargs:
            extra["extra_data"] = kwargs
        super()._log(level, msg, args, exc_info, extra, stack_info, stacklevel + 1)


logging.setLoggerClass(EsdvLogger)


def configure_logging(level: str = "WARNING", format_type: str = "text") -> None:
    """
    Configure the esdv logger hierarchy.

    Args:
        level: Log level name (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        format_type: "json" or "text"
    """
    root = logging.getLogger("esdv")
    root.setLevel(getattr(logging, level.upper()))
    root.propagate = False
    root.handlers.clear()

    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(JSONFormatter() if format_type == "json" else TextFormatter())
    root.addHandler(handler)


def get_logger(name: str) -> EsdvLogger:
    """Logger under the "esdv." hierarchy, e.g. get_logger("core.ingest")."""
    if not name.startswith("esdv"):
        name = f"esdv.{name}"
    return logging.getLogger(name)  # type: ignore[return-value]


class LogContext:
    """
    Adds fields to every log entry emitted inside the block.

    Usage:
        with LogContext(command="value"):
            with LogContext(item_id="V_W"):
                logger.info("Evaluating")
    """

    def __init__(self, **fields: Any):
        self.fields = fields
        self._token: Optional[Token] = None

    def __enter__(self) -> "LogContext":
        self._token = _context_fields.set({**_context_fields.get(), **self.fields})
        return self

    def __exit__(self, *args: Any) -> None:
        if self._token is not None:
            _context_fields.reset(self._token)
            self._token = None


configure_logging()
