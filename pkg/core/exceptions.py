"""
Error kinds raised across the framework.

Every error derives from `CortexError` so callers (the orchestrator's event
loop, the CLI) can convert any framework failure into a failed run or an exit
status with a single `except` clause. Each subclass keeps the offending
identifiers as attributes so tests and log lines can name them.
"""


class CortexError(Exception):
    """Base class for all framework errors."""


class ConfigError(CortexError):
    """Invalid or incomplete configuration."""


# --- core-model ---

class IllegalTransitionError(CortexError):
    def __init__(self, status: str, event: str):
        self.status = status
        self.event = event
        super().__init__(f"illegal transition: event '{event}' in status '{status}'")


class GraphInvalidError(CortexError):
    """A task graph violates one of its structural invariants."""


class GraphCycleError(GraphInvalidError):
    def __init__(self, cycle: list[str]):
        self.cycle = list(cycle)
        super().__init__(f"cycle: {self.cycle}")


class DanglingDependencyError(GraphInvalidError):
    def __init__(self, task_id: str, missing_id: str):
        self.task_id = task_id
        self.missing_id = missing_id
        super().__init__(f"dangling dependency: '{task_id}' depends on missing '{missing_id}'")


# --- comms ---

class UnknownRecipientError(CortexError):
    def __init__(self, recipient: str):
        self.recipient = recipient
        super().__init__(f"unknown recipient '{recipient}'")


class UnknownAgentError(CortexError):
    def __init__(self, agent_id: str):
        self.agent_id = agent_id
        super().__init__(f"unknown agent '{agent_id}'")


class PayloadTooLargeError(CortexError):
    def __init__(self, size: int, limit: int):
        self.size = size
        self.limit = limit
        super().__init__(f"payload of {size} bytes exceeds limit of {limit} bytes")


# --- agents ---

class MissingContextError(CortexError):
    def __init__(self, key: str):
        self.key = key
        super().__init__(f"missing context '{key}'")


class BackendTimeoutError(CortexError):
    def __init__(self, timeout_ms: int):
        self.timeout_ms = timeout_ms
        super().__init__(f"backend timed out after {timeout_ms} ms")


class HttpStatusError(CortexError):
    def __init__(self, status_code: int, body: str = ""):
        self.status_code = status_code
        self.body = body
        super().__init__(f"HTTP {status_code}: {body[:200]}")


class MalformedResponseError(CortexError):
    """The backend answered, but not in the chat-completion shape."""


class MalformedPlanError(CortexError):
    """Planner output holds no usable subtask JSON object."""


class UnknownKindError(CortexError):
    def __init__(self, kind: str):
        self.kind = kind
        super().__init__(f"unknown subtask kind '{kind}'")


class DuplicateIdError(CortexError):
    def __init__(self, task_id: str):
        self.task_id = task_id
        super().__init__(f"duplicate task id '{task_id}'")


# --- orchestrator ---

class NoAgentForRoleError(CortexError):
    def __init__(self, role: str):
        self.role = role
        super().__init__(f"no agent for role '{role}' in the pool")


# --- integration ---

class MissingArtifactError(CortexError):
    def __init__(self, task_id: str):
        self.task_id = task_id
        super().__init__(f"missing artifact for task '{task_id}'")


class NoFailuresError(CortexError):
    def __init__(self, artifact_id: str):
        self.artifact_id = artifact_id
        super().__init__(f"report for artifact '{artifact_id}' has no failed checks")


# --- evaluation ---

class UnfinishedRunError(CortexError):
    def __init__(self, run_id: str):
        self.run_id = run_id
        super().__init__(f"run '{run_id}' has not finished")


class LossInputError(CortexError):
    """LossInput violates its row-sum, one-hot or range invariants."""


class OutOfRangeScoreError(CortexError):
    def __init__(self, row):
        self.row = row
        super().__init__(f"survey score out of range 1..5: {row}")
