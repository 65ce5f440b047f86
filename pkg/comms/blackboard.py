"""Blackboard pattern for shared agent state."""
import json
import logging
import os
import threading
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from comms.message_bus import DEFAULT_PAYLOAD_LIMIT, payload_size
from core.exceptions import PayloadTooLargeError

logger = logging.getLogger(__name__)


def task_key(task_id: str, name: str) -> str:
    """Agents namespace their keys by task: '<task_id>/<name>'."""
    return f"{task_id}/{name}"


@dataclass(frozen=True)
class BlackboardEntry:
    key: str
    value: str
    version: int
    writer: str


class Blackboard:
    """
    Versioned shared workspace.

    Writes are last-writer-wins; the version of a key grows by exactly one per
    successful write. Entries are immutable values swapped under one lock, so
    a reader always sees a value together with its own version, and a
    snapshot is a single point-in-time cut of every key.
    """

    def __init__(self, payload_limit: int = DEFAULT_PAYLOAD_LIMIT):
        self.payload_limit = payload_limit
        self._lock = threading.Lock()
        self._entries: Dict[str, BlackboardEntry] = {}
        self._history: List[Tuple[str, int, str]] = []

    def write(self, key: str, value: str, writer: str) -> int:
        """
        Stores `value` under `key` and returns the new version.

        Raises:
            PayloadTooLargeError: value exceeds the configured limit.
        """
        size = payload_size(value)
        if size > self.payload_limit:
            raise PayloadTooLargeError(size, self.payload_limit)
        with self._lock:
            previous = self._entries.get(key)
            version = previous.version + 1 if previous else 1
            self._entries[key] = BlackboardEntry(key=key, value=value, version=version, writer=writer)
            self._history.append((key, version, writer))
        logger.debug(f"Blackboard: {writer} wrote '{key}' v{version}")
        return version

    def read(self, key: str) -> Optional[BlackboardEntry]:
        """Latest committed entry for `key`, or None when absent."""
        with self._lock:
            return self._entries.get(key)

    def snapshot(self) -> Dict[str, Tuple[str, int]]:
        """Point-in-time copy: key -> (value, version)."""
        with self._lock:
            return {key: (entry.value, entry.version) for key, entry in self._entries.items()}

    def values(self) -> Dict[str, str]:
        """Point-in-time copy: key -> value (the view handed to prompt rendering)."""
        with self._lock:
            return {key: entry.value for key, entry in self._entries.items()}

    def history(self) -> List[Tuple[str, int, str]]:
        """Every committed write as (key, version, writer), in commit order."""
        with self._lock:
            return list(self._history)

    def dump(self, path: str) -> str:
        """Writes a snapshot as JSON for debugging and returns the path."""
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        with self._lock:
            data = {key: {"value": e.value, "version": e.version, "writer": e.writer}
                    for key, e in self._entries.items()}
        with open(path, "w", encoding="utf-8") as f:
            json.dump(data, f, indent=2, ensure_ascii=False)
        logger.info(f"Dumped blackboard ({len(data)} keys) to {path}")
        return path

    def __repr__(self) -> str:
        with self._lock:
            keys = list(self._entries.keys())
        return f"<Blackboard keys={keys}>"
