"""
Directed FIFO message passing between agents.

Each registered agent owns one inbox. A single inbox per recipient keeps the
global send order, which in particular preserves the order per
(sender, recipient) pair. Sequence numbers are assigned per pair, starting at 1.
"""
import logging
import threading
from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Deque, Dict, List, Optional, Tuple

from core.exceptions import PayloadTooLargeError, UnknownAgentError, UnknownRecipientError

logger = logging.getLogger(__name__)

DEFAULT_PAYLOAD_LIMIT = 1024 * 1024  # 1 MiB


class MessageKind(str, Enum):
    ASSIGN = "assign"
    RESULT = "result"
    ERROR = "error"
    CONTROL = "control"


@dataclass(frozen=True)
class Message:
    seq: int
    sender: str
    recipient: str
    kind: MessageKind
    task_id: str
    payload: str = ""


def payload_size(payload: str) -> int:
    return len(payload.encode("utf-8"))


class MessageBus:
    """In-process bus, safe for any number of concurrent producers and consumers."""

    def __init__(self, payload_limit: int = DEFAULT_PAYLOAD_LIMIT):
        self.payload_limit = payload_limit
        self._lock = threading.Lock()
        self._inboxes: Dict[str, Deque[Message]] = {}
        self._conditions: Dict[str, threading.Condition] = {}
        self._seq: Dict[Tuple[str, str], int] = {}

    def register(self, agent_id: str):
        """Registers an agent inbox. Registering twice is a no-op."""
        with self._lock:
            if agent_id not in self._inboxes:
                self._inboxes[agent_id] = deque()
                self._conditions[agent_id] = threading.Condition(self._lock)

    def is_registered(self, agent_id: str) -> bool:
        with self._lock:
            return agent_id in self._inboxes

    def send(self, sender: str, recipient: str, kind: MessageKind, task_id: str, payload: str = "") -> int:
        """
        Enqueues a message for `recipient` and returns its sequence number.

        Raises:
            UnknownRecipientError: recipient is not registered.
            PayloadTooLargeError: payload exceeds the bus limit.
        """
        size = payload_size(payload)
        if size > self.payload_limit:
            raise PayloadTooLargeError(size, self.payload_limit)
        with self._lock:
            if recipient not in self._inboxes:
                raise UnknownRecipientError(recipient)
            pair = (sender, recipient)
            seq = self._seq.get(pair, 0) + 1
            self._seq[pair] = seq
            self._inboxes[recipient].append(Message(seq=seq, sender=sender, recipient=recipient,
                                                    kind=MessageKind(kind), task_id=task_id, payload=payload))
            self._conditions[recipient].notify()
        logger.debug(f"{sender} -> {recipient} #{seq} {MessageKind(kind).value} {task_id}")
        return seq

    def receive(self, agent_id: str, timeout_ms: float) -> Optional[Message]:
        """
        Returns the oldest undelivered message for `agent_id`, or None once
        `timeout_ms` has elapsed with an empty inbox.

        Raises:
            UnknownAgentError: agent is not registered.
        """
        with self._lock:
            if agent_id not in self._inboxes:
                raise UnknownAgentError(agent_id)
            inbox = self._inboxes[agent_id]
            if not self._conditions[agent_id].wait_for(lambda: len(inbox) > 0, timeout=max(0.0, timeout_ms) / 1000.0):
                return None
            return inbox.popleft()

    def pending(self, agent_id: str) -> int:
        with self._lock:
            if agent_id not in self._inboxes:
                raise UnknownAgentError(agent_id)
            return len(self._inboxes[agent_id])

    def drain(self, agent_id: str) -> List[Message]:
        """Removes and returns every message currently queued for `agent_id`."""
        with self._lock:
            if agent_id not in self._inboxes:
                raise UnknownAgentError(agent_id)
            messages = list(self._inboxes[agent_id])
            self._inboxes[agent_id].clear()
            return messages
