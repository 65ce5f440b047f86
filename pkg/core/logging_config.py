import json
import logging
import os
import sys
import threading
from logging.handlers import RotatingFileHandler
from typing import Any, Dict, List, Optional, TextIO

from core.model import monotonic_ms

RUN_EVENTS = ("dispatched", "completed", "failed", "retried", "stalled")


def setup_logging(log_filename: str, log_dir: str = '.', console: bool = False):
    """
    Configures a rotating file logger for the application.

    This function sets up a global logger that writes to a specified file with
    log rotation. It is idempotent, so importing the CLI module more than once
    (as the test runner does) never stacks duplicate handlers.

    Args:
        log_filename: The name of the log file (e.g., 'cortex_engine.log').
        log_dir: The directory to store the log file. Defaults to the current directory.
        console: Also echo records to stderr (used by `--verbose`).
    """
    os.makedirs(log_dir, exist_ok=True)
    log_filepath = os.path.abspath(os.path.join(log_dir, log_filename))

    root_logger = logging.getLogger()
    root_logger.setLevel(logging.INFO)
    formatter = logging.Formatter("[%(asctime)s %(filename)s->%(funcName)s():%(lineno)s]%(levelname)s: %(message)s")

    if not any(isinstance(h, RotatingFileHandler) and h.baseFilename == log_filepath for h in root_logger.handlers):
        max_bytes = 10 * 1024 * 1024  # 10 MB
        backup_count = 5
        handler = RotatingFileHandler(log_filepath, maxBytes=max_bytes, backupCount=backup_count)
        handler.setFormatter(formatter)
        root_logger.addHandler(handler)

    if console and not any(getattr(h, '_cortex_console', False) for h in root_logger.handlers):
        stream_handler = logging.StreamHandler(sys.stderr)
        stream_handler.setFormatter(formatter)
        stream_handler._cortex_console = True
        root_logger.addHandler(stream_handler)


class RunEventLogger:
    """
    Structured run-event log: one JSON object per line with keys
    ts_ms, event, task_id, agent_id, detail.

    Events are always kept in memory (tests reconstruct run traces from them)
    and are optionally mirrored to a stream or a file. Safe for concurrent use.
    """

    def __init__(self, stream: Optional[TextIO] = None, path: Optional[str] = None):
        self._lock = threading.Lock()
        self._events: List[Dict[str, Any]] = []
        self._stream = stream
        self._file = None
        if path:
            os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
            self._file = open(path, 'a', encoding='utf-8')

    def emit(self, event: str, task_id: str, agent_id: Optional[str] = None, detail: str = "") -> Dict[str, Any]:
        if event not in RUN_EVENTS:
            raise ValueError(f"Unknown run event '{event}'.")
        with self._lock:
            record = {"ts_ms": monotonic_ms(), "event": event, "task_id": task_id,
                      "agent_id": agent_id, "detail": detail}
            self._events.append(record)
            line = json.dumps(record, ensure_ascii=False)
            if self._stream is not None:
                self._stream.write(line + "\n")
                self._stream.flush()
            if self._file is not None:
                self._file.write(line + "\n")
                self._file.flush()
            return record

    @property
    def events(self) -> List[Dict[str, Any]]:
        with self._lock:
            return list(self._events)

    def close(self):
        with self._lock:
            if self._file is not None:
                self._file.close()
                self._file = None
