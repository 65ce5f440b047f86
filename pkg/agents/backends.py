"""
Generation backends.

- `MockBackend` produces deterministic, seeded template output per role after a
  simulated latency, and can be scripted to fail a task a given number of times.
- `HttpBackend` speaks a minimal chat-completion protocol over JSON/HTTP.

Both return an `AgentOutput`; failures are reported with ok=False rather than
raised so the orchestrator's feedback loop can treat them like failed checks.
"""
import json
import logging
import random
import threading
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Optional

import requests

from core.exceptions import (
    BackendTimeoutError,
    ConfigError,
    CortexError,
    HttpStatusError,
    MalformedResponseError,
)
from core.model import AgentRole, Task, monotonic_ms
from tools.file_wrapper import retry_with_exponential_backoff

logger = logging.getLogger(__name__)

MOCK_MARKER = "MOCK-IMPL"
DEFAULT_TIMEOUT_MS = 60000
DEFAULT_MOCK_LATENCY_MS = 100.0

# Extra implement subtasks emitted by the mock planner for specs of higher complexity.
_MOCK_COMPONENTS = ["player movement", "collision handling", "scoring and levels",
                    "enemy behaviour", "rendering", "input handling"]


class BackendKind(str, Enum):
    MOCK = "mock"
    HTTP = "http"


@dataclass(frozen=True)
class BackendConfig:
    kind: BackendKind = BackendKind.MOCK
    endpoint_url: str = ""
    model_name: str = "mock-cortex"
    timeout_ms: int = DEFAULT_TIMEOUT_MS
    seed: int = 0
    # task_id or task kind -> number of scripted failures (mock only).
    failure_plan: Dict[str, int] = field(default_factory=dict)
    mock_latency_ms: float = DEFAULT_MOCK_LATENCY_MS

    def __post_init__(self):
        if self.timeout_ms <= 0:
            raise ConfigError(f"timeout_ms must be positive, got {self.timeout_ms}.")
        if self.kind == BackendKind.HTTP and not self.endpoint_url:
            raise ConfigError("The http backend requires a non-empty endpoint_url.")
        if self.mock_latency_ms < 0:
            raise ConfigError(f"mock_latency_ms must be non-negative, got {self.mock_latency_ms}.")
        for key, count in self.failure_plan.items():
            if count < 0:
                raise ConfigError(f"failure_plan count for '{key}' must be non-negative, got {count}.")


@dataclass(frozen=True)
class AgentOutput:
    raw_text: str
    latency_ms: float
    ok: bool
    error_detail: Optional[str] = None

    def __post_init__(self):
        if not self.ok and not self.error_detail:
            raise ValueError("A failed AgentOutput must carry an error_detail.")
        if self.latency_ms < 0:
            raise ValueError("latency_ms must be non-negative.")


def _subject(description: str) -> str:
    """The short name of what is being built: the description up to its first ':' or '.'."""
    head = description.strip().splitlines()[0] if description.strip() else ""
    for sep in (":", "."):
        head = head.split(sep)[0]
    return head.strip()[:60] or "the program"


def _identifier(task_id: str) -> str:
    cleaned = "".join(ch if ch.isalnum() else "_" for ch in task_id)
    return cleaned if cleaned[:1].isalpha() else f"t_{cleaned}"


def _mock_plan(task: Task, rng: random.Random) -> str:
    subject = _subject(task.description)
    complexity = max(1, task.complexity)
    subtasks = [
        {"id": "d1", "kind": "data_structures",
         "description": f"Organize the data structures for {subject}: the world grid, the entities and the game state.",
         "depends_on": []},
        {"id": "l1", "kind": "logic_review",
         "description": f"Ensure logical consistency in the {subject} rules and state transitions.",
         "depends_on": ["d1"]},
        {"id": "m1", "kind": "implement",
         "description": f"Implement the main game loop for {subject}.",
         "depends_on": ["d1", "l1"]},
    ]
    for i in range(2, complexity + 1):
        component = _MOCK_COMPONENTS[(i - 2) % len(_MOCK_COMPONENTS)]
        subtasks.append({"id": f"m{i}", "kind": "implement",
                         "description": f"Implement {component} for {subject}.",
                         "depends_on": ["d1", "l1"]})
    subtasks.append({"id": f"m{complexity + 1}", "kind": "implement",
                     "description": f"Implement unit tests for {subject}.",
                     "depends_on": [f"m{i}" for i in range(1, complexity + 1)]})
    return json.dumps({"variant": f"{rng.getrandbits(32):08x}", "subtasks": subtasks}, indent=2)


def mock_generate(role: AgentRole, task: Task, seed: int) -> str:
    """
    Deterministic template output for `role`. The same (role, task, seed)
    always yields the same text; a different seed changes the variant token.
    """
    role = AgentRole(role)
    rng = random.Random(f"{seed}|{role.value}|{task.task_id}")
    if role == AgentRole.PREFRONTAL:
        return _mock_plan(task, rng)

    variant = f"{rng.getrandbits(32):08x}"
    name = _identifier(task.task_id)
    if role == AgentRole.PARIETAL:
        return (f"Schema for {task.task_id} (variant {variant})\n"
                f"- {task.description}\n"
                f"class GameState: grid (list of rows), entities (dict id -> Entity), score (int), tick (int)\n"
                f"class Entity: kind (str), position (row, col), direction (str)\n")
    if role == AgentRole.TEMPORAL:
        return (f"Review for {task.task_id} (variant {variant})\n"
                f"- {task.description}\n"
                f"- check: entities never leave the grid\n"
                f"- check: the score never decreases\n"
                f"- check: the tick advances by exactly one per loop iteration\n")
    if role == AgentRole.MOTOR:
        return (f"# {MOCK_MARKER} {task.task_id}\n"
                f"# variant {variant}\n"
                f"def {name}(state):\n"
                f"    \"\"\"{task.description}\"\"\"\n"
                f"    state['tick'] = state.get('tick', 0) + 1\n"
                f"    return state\n"
                f"\n"
                f"\n"
                f"def test_{name}():\n"
                f"    assert {name}({{'tick': 0}})['tick'] == 1\n")
    if role == AgentRole.MONOLITH:
        return (f"# {MOCK_MARKER} {task.task_id}\n"
                f"# variant {variant}\n"
                f"# {_subject(task.description)}\n"
                f"class GameState:\n"
                f"    def __init__(self):\n"
                f"        self.grid = []\n"
                f"        self.score = 0\n"
                f"        self.tick = 0\n"
                f"\n"
                f"\n"
                f"def main_loop(state):\n"
                f"    state.tick += 1\n"
                f"    return state\n"
                f"\n"
                f"\n"
                f"def test_main_loop():\n"
                f"    assert main_loop(GameState()).tick == 1\n")
    return f"{role.value} output for {task.task_id} (variant {variant})\n"


class MockBackend:
    """Deterministic backend for tests and benchmarks. Safe for concurrent invoke calls."""

    def __init__(self, config: BackendConfig):
        self.config = config
        self._lock = threading.Lock()
        self._invocations: Dict[str, int] = {}

    def _scripted_failures(self, task: Task) -> int:
        plan = self.config.failure_plan
        if task.task_id in plan:
            return plan[task.task_id]
        return plan.get(task.kind.value, 0)

    def invoke(self, prompt: str, role: AgentRole, task: Task) -> AgentOutput:
        if not prompt:
            raise ValueError("prompt must be non-empty.")
        start = monotonic_ms()
        with self._lock:
            count = self._invocations.get(task.task_id, 0) + 1
            self._invocations[task.task_id] = count
        if self.config.mock_latency_ms > 0:
            time.sleep(self.config.mock_latency_ms / 1000.0)

        failures = self._scripted_failures(task)
        if count <= failures:
            logger.info(f"Mock backend: scripted failure {count}/{failures} for task '{task.task_id}'")
            return AgentOutput(raw_text="", latency_ms=monotonic_ms() - start, ok=False,
                               error_detail=f"scripted failure {count}/{failures}")
        text = mock_generate(role, task, self.config.seed)
        return AgentOutput(raw_text=text, latency_ms=monotonic_ms() - start, ok=True)

    def invocation_count(self, task_id: str) -> int:
        with self._lock:
            return self._invocations.get(task_id, 0)


class HttpBackend:
    """
    Chat-completion client: POST {model, messages:[{role:"user", content}], temperature:0}
    and return choices[0].message.content. One retry on transport errors, none on non-2xx.
    """

    def __init__(self, config: BackendConfig, api_key: Optional[str] = None):
        self.config = config
        self.api_key = api_key

    def _headers(self) -> Dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        return headers

    @retry_with_exponential_backoff(initial_delay=0.2, max_retries=1, errors=(requests.ConnectionError,))
    def _post(self, payload: dict) -> requests.Response:
        try:
            return requests.post(self.config.endpoint_url, headers=self._headers(), json=payload,
                                 timeout=self.config.timeout_ms / 1000.0)
        except requests.Timeout:
            raise BackendTimeoutError(self.config.timeout_ms)

    def complete(self, prompt: str) -> str:
        """
        Performs one request-response and returns the first message text.

        Raises:
            BackendTimeoutError, HttpStatusError, MalformedResponseError, requests.RequestException
        """
        payload = {
            "model": self.config.model_name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": 0,
        }
        response = self._post(payload)
        if not 200 <= response.status_code < 300:
            raise HttpStatusError(response.status_code, response.text)
        try:
            data = response.json()
            content = data["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as e:
            raise MalformedResponseError(f"unexpected chat-completion response: {type(e).__name__}: {e}")
        if not isinstance(content, str):
            raise MalformedResponseError("choices[0].message.content is not a string")
        return content

    def invoke(self, prompt: str, role: AgentRole, task: Task) -> AgentOutput:
        if not prompt:
            raise ValueError("prompt must be non-empty.")
        start = monotonic_ms()
        try:
            text = self.complete(prompt)
        except (CortexError, requests.RequestException) as e:
            logger.warning(f"HTTP backend failed for task '{task.task_id}' ({AgentRole(role).value}): {e}")
            return AgentOutput(raw_text="", latency_ms=monotonic_ms() - start, ok=False,
                               error_detail=f"{type(e).__name__}: {e}")
        return AgentOutput(raw_text=text, latency_ms=monotonic_ms() - start, ok=True)


def build_backend(config: BackendConfig, api_key: Optional[str] = None):
    """Factory for backend providers."""
    if config.kind == BackendKind.MOCK:
        return MockBackend(config)
    if config.kind == BackendKind.HTTP:
        if api_key is None:
            from load_cfg import get_api_key
            api_key = get_api_key()
        return HttpBackend(config, api_key=api_key)
    raise ConfigError(f"Unsupported backend kind: {config.kind}")
