"""
Shared value types for the orchestration framework.

All types here are frozen dataclasses: "mutating" a task, graph or profile
returns a new value via `dataclasses.replace`, so values can be handed to
worker threads without locking. The module also owns the task status
machine, graph validation, topological ordering and the JSON persistence of
`PipelineRun` records (one document per run under `runs/<run_id>.json`).
"""
import json
import logging
import os
import time
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Dict, Iterable, List, Mapping, Optional, Tuple

from core.exceptions import (
    DanglingDependencyError,
    GraphCycleError,
    GraphInvalidError,
    IllegalTransitionError,
)

logger = logging.getLogger(__name__)

DEFAULT_MAX_ATTEMPTS = 3

# Reserved task ids created by the orchestrator itself.
PLAN_TASK_ID = "plan"
INTEGRATE_TASK_ID = "integrate"
MONOLITH_TASK_ID = "monolith"


def monotonic_ms() -> float:
    """Milliseconds from the monotonic clock. Only differences are meaningful."""
    return time.monotonic() * 1000.0


class AgentRole(str, Enum):
    ORCHESTRATOR = "Orchestrator"
    PREFRONTAL = "Prefrontal"
    PARIETAL = "Parietal"
    TEMPORAL = "Temporal"
    MOTOR = "Motor"
    MONOLITH = "Monolith"


class TaskKind(str, Enum):
    PLAN = "plan"
    DATA_STRUCTURES = "data_structures"
    LOGIC_REVIEW = "logic_review"
    IMPLEMENT = "implement"
    INTEGRATE = "integrate"
    MONOLITH = "monolith"


class TaskStatus(str, Enum):
    PENDING = "pending"
    READY = "ready"
    RUNNING = "running"
    DONE = "done"
    FAILED = "failed"


class TaskEvent(str, Enum):
    DEPS_MET = "deps_met"
    DISPATCHED = "dispatched"
    COMPLETED = "completed"
    CHECK_FAILED_RETRY = "check_failed_retry"
    EXHAUSTED = "exhausted"


class ContentKind(str, Enum):
    PLAN = "plan"
    SCHEMA = "schema"
    REVIEW = "review"
    CODE = "code"
    INTEGRATED_CODE = "integrated_code"


class CheckMethod(str, Enum):
    CONTAINS_TEXT = "contains_text"
    EXTERNAL_COMMAND = "external_command"
    SCRIPTED = "scripted"


class PipelineMode(str, Enum):
    MODULAR = "modular"
    MONOLITHIC = "monolithic"


class RunStatus(str, Enum):
    SUCCEEDED = "succeeded"
    FAILED = "failed"


KIND_TO_ROLE: Dict[TaskKind, AgentRole] = {
    TaskKind.PLAN: AgentRole.PREFRONTAL,
    TaskKind.DATA_STRUCTURES: AgentRole.PARIETAL,
    TaskKind.LOGIC_REVIEW: AgentRole.TEMPORAL,
    TaskKind.IMPLEMENT: AgentRole.MOTOR,
    TaskKind.INTEGRATE: AgentRole.ORCHESTRATOR,
    TaskKind.MONOLITH: AgentRole.MONOLITH,
}

KIND_TO_CONTENT: Dict[TaskKind, ContentKind] = {
    TaskKind.PLAN: ContentKind.PLAN,
    TaskKind.DATA_STRUCTURES: ContentKind.SCHEMA,
    TaskKind.LOGIC_REVIEW: ContentKind.REVIEW,
    TaskKind.IMPLEMENT: ContentKind.CODE,
    TaskKind.INTEGRATE: ContentKind.INTEGRATED_CODE,
    TaskKind.MONOLITH: ContentKind.INTEGRATED_CODE,
}

TERMINAL_STATUSES = frozenset({TaskStatus.DONE, TaskStatus.FAILED})

DEFAULT_CHECK_TARGETS: Tuple[ContentKind, ...] = (ContentKind.CODE, ContentKind.INTEGRATED_CODE)


@dataclass(frozen=True)
class CheckSpec:
    """An acceptance check declared by a TaskSpec."""
    name: str
    method: CheckMethod
    argument: str
    applies_to: Tuple[ContentKind, ...] = DEFAULT_CHECK_TARGETS

    def applies(self, content_kind: ContentKind) -> bool:
        return content_kind in self.applies_to


@dataclass(frozen=True)
class TaskSpec:
    """The user's programming objective plus the checks that define success."""
    spec_id: str
    title: str
    description: str
    target_language_tag: str = "python"
    checks: Tuple[CheckSpec, ...] = ()
    mode: PipelineMode = PipelineMode.MODULAR
    complexity: int = 1

    def __post_init__(self):
        if not self.spec_id:
            raise ValueError("spec_id must be non-empty.")
        if self.complexity < 1:
            raise ValueError(f"complexity must be >= 1, got {self.complexity}.")


@dataclass(frozen=True)
class Task:
    task_id: str
    kind: TaskKind
    role: AgentRole
    description: str
    deps: frozenset = frozenset()
    priority: int = 0
    status: TaskStatus = TaskStatus.PENDING
    attempts: int = 0
    max_attempts: int = DEFAULT_MAX_ATTEMPTS
    complexity: int = 1

    def __post_init__(self):
        if not self.task_id:
            raise ValueError("task_id must be non-empty.")
        if self.max_attempts < 1:
            raise ValueError(f"max_attempts must be positive, got {self.max_attempts}.")
        if not 0 <= self.attempts <= self.max_attempts:
            raise ValueError(f"attempts {self.attempts} outside 0..{self.max_attempts} for '{self.task_id}'.")
        if self.priority < 0:
            raise ValueError(f"priority must be non-negative, got {self.priority}.")

    @property
    def content_kind(self) -> ContentKind:
        return KIND_TO_CONTENT[self.kind]

    @property
    def is_terminal(self) -> bool:
        return self.status in TERMINAL_STATUSES


def make_task(task_id: str, kind: TaskKind, description: str, deps: Iterable[str] = (), **kwargs) -> Task:
    """Builds a task whose role follows from its kind."""
    return Task(task_id=task_id, kind=kind, role=KIND_TO_ROLE[kind], description=description,
                deps=frozenset(deps), **kwargs)


def transition(task: Task, event: TaskEvent) -> Task:
    """
    Applies one event of the task status machine.

    pending -deps_met-> ready -dispatched-> running -completed-> done
    running -check_failed_retry-> ready   (only while attempts < max_attempts)
    running -exhausted-> failed

    Raises:
        IllegalTransitionError: the event is not legal in the current status.
    """
    status = task.status
    if status == TaskStatus.PENDING and event == TaskEvent.DEPS_MET:
        return replace(task, status=TaskStatus.READY)
    if status == TaskStatus.READY and event == TaskEvent.DISPATCHED and task.attempts < task.max_attempts:
        return replace(task, status=TaskStatus.RUNNING, attempts=task.attempts + 1)
    if status == TaskStatus.RUNNING:
        if event == TaskEvent.COMPLETED:
            return replace(task, status=TaskStatus.DONE)
        if event == TaskEvent.CHECK_FAILED_RETRY and task.attempts < task.max_attempts:
            return replace(task, status=TaskStatus.READY)
        if event == TaskEvent.EXHAUSTED:
            return replace(task, status=TaskStatus.FAILED)
    raise IllegalTransitionError(status.value, TaskEvent(event).value)


@dataclass(frozen=True)
class TaskGraph:
    """Tasks keyed by id; edges are implied by each task's deps. Dict order is insertion order."""
    nodes: Mapping[str, Task] = field(default_factory=dict)

    @classmethod
    def from_tasks(cls, tasks: Iterable[Task]) -> "TaskGraph":
        nodes: Dict[str, Task] = {}
        for task in tasks:
            nodes[task.task_id] = task
        return cls(nodes=nodes)

    def __contains__(self, task_id: str) -> bool:
        return task_id in self.nodes

    def __len__(self) -> int:
        return len(self.nodes)

    def __getitem__(self, task_id: str) -> Task:
        return self.nodes[task_id]

    @property
    def task_ids(self) -> List[str]:
        return list(self.nodes.keys())

    def tasks(self) -> List[Task]:
        return list(self.nodes.values())

    def with_task(self, task: Task) -> "TaskGraph":
        """Returns a new graph with `task` replaced (or appended when new)."""
        nodes = dict(self.nodes)
        nodes[task.task_id] = task
        return TaskGraph(nodes=nodes)

    def with_tasks(self, tasks: Iterable[Task]) -> "TaskGraph":
        nodes = dict(self.nodes)
        for task in tasks:
            nodes[task.task_id] = task
        return TaskGraph(nodes=nodes)

    def dependents(self) -> Dict[str, List[str]]:
        """Reverse adjacency: task_id -> ids of tasks that depend on it (insertion order)."""
        reverse: Dict[str, List[str]] = {task_id: [] for task_id in self.nodes}
        for task in self.nodes.values():
            for dep in task.deps:
                if dep in reverse:
                    reverse[dep].append(task.task_id)
        return reverse

    def count_kind(self, kind: TaskKind) -> int:
        return sum(1 for t in self.nodes.values() if t.kind == kind)


def _find_cycle(graph: TaskGraph) -> Optional[List[str]]:
    """Iterative three-colour DFS over dependency edges. Returns one cycle or None."""
    white, grey, black = 0, 1, 2
    colour = {task_id: white for task_id in graph.nodes}
    for root in graph.nodes:
        if colour[root] != white:
            continue
        path: List[str] = [root]
        stack = [iter(sorted(graph[root].deps))]
        colour[root] = grey
        while stack:
            dep = next(stack[-1], None)
            if dep is None:
                colour[path.pop()] = black
                stack.pop()
                continue
            if dep not in colour:
                continue
            if colour[dep] == grey:
                return path[path.index(dep):]
            if colour[dep] == white:
                colour[dep] = grey
                path.append(dep)
                stack.append(iter(sorted(graph[dep].deps)))
    return None


def validate_graph(graph: TaskGraph, mode: Optional[PipelineMode] = None) -> None:
    """
    Checks that the graph is a well-formed DAG.

    Args:
        graph: The graph to validate.
        mode: When given, also checks the integrate-node count for that mode
              (exactly one in modular mode, none in monolithic mode).

    Raises:
        DanglingDependencyError: a dependency id is not a node.
        GraphCycleError: the dependency relation has a cycle (self-loops included).
        GraphInvalidError: a task's role does not match its kind, or the
                           integrate count is wrong for `mode`.
    """
    for task in graph.nodes.values():
        for dep in sorted(task.deps):
            if dep not in graph.nodes:
                raise DanglingDependencyError(task.task_id, dep)

    cycle = _find_cycle(graph)
    if cycle is not None:
        raise GraphCycleError(cycle)

    for task in graph.nodes.values():
        if KIND_TO_ROLE[task.kind] != task.role:
            raise GraphInvalidError(
                f"task '{task.task_id}' of kind '{task.kind.value}' has role '{task.role.value}', "
                f"expected '{KIND_TO_ROLE[task.kind].value}'")

    if mode is not None:
        integrate_count = graph.count_kind(TaskKind.INTEGRATE)
        expected = 1 if mode == PipelineMode.MODULAR else 0
        if integrate_count != expected:
            raise GraphInvalidError(
                f"{mode.value} graph must have {expected} integrate task(s), found {integrate_count}")


def topological_order(graph: TaskGraph) -> List[str]:
    """
    Kahn's algorithm; among tasks whose deps are satisfied, graph insertion
    order decides. Raises GraphCycleError if not every node can be ordered.
    """
    position = {task_id: i for i, task_id in enumerate(graph.nodes)}
    remaining = {task_id: len([d for d in task.deps if d in graph.nodes]) for task_id, task in graph.nodes.items()}
    reverse = graph.dependents()
    frontier = sorted((tid for tid, n in remaining.items() if n == 0), key=position.__getitem__)
    order: List[str] = []
    while frontier:
        current = frontier.pop(0)
        order.append(current)
        for child in reverse[current]:
            remaining[child] -= 1
            if remaining[child] == 0:
                frontier.append(child)
        frontier.sort(key=position.__getitem__)
    if len(order) != len(graph.nodes):
        raise GraphCycleError(_find_cycle(graph) or [tid for tid in graph.nodes if tid not in order])
    return order


@dataclass(frozen=True)
class Artifact:
    artifact_id: str
    task_id: str
    role: AgentRole
    content: str
    content_kind: ContentKind
    created_at_ms: float


@dataclass(frozen=True)
class CheckResult:
    check_name: str
    passed: bool
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    artifact_id: str
    task_id: str
    results: Tuple[CheckResult, ...] = ()

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def failures(self) -> List[CheckResult]:
        return [r for r in self.results if not r.passed]


@dataclass(frozen=True)
class AgentProfile:
    """An agent in the pool plus the running analytics used for assignment."""
    agent_id: str
    role: AgentRole
    capacity: int = 1
    in_flight: int = 0
    ema_latency_ms: float = 0.0
    success_rate: float = 0.0
    completed: int = 0
    successes: int = 0

    def __post_init__(self):
        if not self.agent_id:
            raise ValueError("agent_id must be non-empty.")
        if self.capacity < 1:
            raise ValueError(f"capacity must be positive for agent '{self.agent_id}'.")
        if not 0 <= self.in_flight <= self.capacity:
            raise ValueError(f"in_flight {self.in_flight} outside 0..{self.capacity} for agent '{self.agent_id}'.")
        if self.ema_latency_ms < 0:
            raise ValueError("ema_latency_ms must be non-negative.")

    @property
    def has_capacity(self) -> bool:
        return self.in_flight < self.capacity


@dataclass(frozen=True)
class PipelineRun:
    """A complete execution record. `finished_at_ms`/`status` are None while the run is in progress."""
    run_id: str
    spec: TaskSpec
    graph: TaskGraph
    artifacts: Tuple[Artifact, ...] = ()
    reports: Tuple[ValidationReport, ...] = ()
    started_at_ms: float = 0.0
    finished_at_ms: Optional[float] = None
    status: Optional[RunStatus] = None
    seed: int = 0
    failure_reason: Optional[str] = None
    wall_started_at: str = ""

    @property
    def is_finished(self) -> bool:
        return self.finished_at_ms is not None and self.status is not None

    def final_artifact(self) -> Optional[Artifact]:
        """The integrated (or monolith) artifact, if the run produced one."""
        finals = [a for a in self.artifacts if a.content_kind == ContentKind.INTEGRATED_CODE]
        return finals[-1] if finals else None


@dataclass(frozen=True)
class LossInput:
    """
    Inputs of the regularized cross-entropy utility.

    probs[i][j] is p(y_ij | x_i; theta); labels is the one-hot y_ij matrix;
    theta is represented only by its squared L2 norm.
    """
    probs: Tuple[Tuple[float, ...], ...]
    labels: Tuple[Tuple[int, ...], ...]
    lambda_: float = 0.0
    theta_sq_norm: float = 0.0


# --- JSON persistence ---

def check_to_dict(check: CheckSpec) -> Dict[str, Any]:
    return {"name": check.name, "method": check.method.value, "argument": check.argument,
            "applies_to": [k.value for k in check.applies_to]}


def _string_field(data: Mapping[str, Any], key: str, default: Optional[str] = None) -> str:
    value = data.get(key, default)
    if not isinstance(value, str):
        raise ValueError(f"Field '{key}' must be a string, got {type(value).__name__}.")
    return value


def check_from_dict(data: Mapping[str, Any]) -> CheckSpec:
    if not isinstance(data, Mapping):
        raise ValueError(f"A check must be a JSON object, got {type(data).__name__}.")
    applies_to = data.get("applies_to")
    if applies_to is not None and (not isinstance(applies_to, list)
                                   or not all(isinstance(k, str) for k in applies_to)):
        raise ValueError(f"Check field 'applies_to' must be a list of content kinds, got {applies_to!r}.")
    return CheckSpec(
        name=_string_field(data, "name"),
        method=CheckMethod(_string_field(data, "method")),
        argument=_string_field(data, "argument", ""),
        applies_to=tuple(ContentKind(k) for k in applies_to) if applies_to is not None else DEFAULT_CHECK_TARGETS,
    )


def spec_to_dict(spec: TaskSpec) -> Dict[str, Any]:
    return {"spec_id": spec.spec_id, "title": spec.title, "description": spec.description,
            "target_language_tag": spec.target_language_tag,
            "checks": [check_to_dict(c) for c in spec.checks],
            "mode": spec.mode.value, "complexity": spec.complexity}


def spec_from_dict(data: Mapping[str, Any]) -> TaskSpec:
    """
    Builds a TaskSpec from its JSON form.

    Raises:
        KeyError: spec_id or description is missing.
        ValueError: a field has the wrong type or an unknown enum value.
    """
    spec_id = _string_field(data, "spec_id")
    checks = data.get("checks", [])
    if not isinstance(checks, list):
        raise ValueError(f"Field 'checks' must be a list, got {type(checks).__name__}.")
    complexity = data.get("complexity", 1)
    if isinstance(complexity, bool) or not isinstance(complexity, int):
        raise ValueError(f"Field 'complexity' must be an integer, got {complexity!r}.")
    if "description" not in data:
        raise KeyError("description")
    return TaskSpec(
        spec_id=spec_id,
        title=_string_field(data, "title", spec_id),
        description=_string_field(data, "description"),
        target_language_tag=_string_field(data, "target_language_tag", "python"),
        checks=tuple(check_from_dict(c) for c in checks),
        mode=PipelineMode(_string_field(data, "mode", PipelineMode.MODULAR.value)),
        complexity=complexity,
    )


def load_task_spec(path: str) -> TaskSpec:
    """Reads a TaskSpec JSON file. Raises OSError, ValueError or KeyError on bad input."""
    with open(path, "r", encoding="utf-8") as f:
        data = json.load(f)
    if not isinstance(data, dict):
        raise ValueError(f"Task spec {path} must be a JSON object.")
    return spec_from_dict(data)


def task_to_dict(task: Task) -> Dict[str, Any]:
    return {"task_id": task.task_id, "kind": task.kind.value, "role": task.role.value,
            "description": task.description, "deps": sorted(task.deps), "priority": task.priority,
            "status": task.status.value, "attempts": task.attempts, "max_attempts": task.max_attempts,
            "complexity": task.complexity}


def task_from_dict(data: Mapping[str, Any]) -> Task:
    return Task(task_id=data["task_id"], kind=TaskKind(data["kind"]), role=AgentRole(data["role"]),
                description=data["description"], deps=frozenset(data.get("deps", [])),
                priority=data.get("priority", 0), status=TaskStatus(data.get("status", "pending")),
                attempts=data.get("attempts", 0), max_attempts=data.get("max_attempts", DEFAULT_MAX_ATTEMPTS),
                complexity=data.get("complexity", 1))


def artifact_to_dict(artifact: Artifact) -> Dict[str, Any]:
    return {"artifact_id": artifact.artifact_id, "task_id": artifact.task_id, "role": artifact.role.value,
            "content": artifact.content, "content_kind": artifact.content_kind.value,
            "created_at_ms": artifact.created_at_ms}


def artifact_from_dict(data: Mapping[str, Any]) -> Artifact:
    return Artifact(artifact_id=data["artifact_id"], task_id=data["task_id"], role=AgentRole(data["role"]),
                    content=data["content"], content_kind=ContentKind(data["content_kind"]),
                    created_at_ms=data["created_at_ms"])


def report_to_dict(report: ValidationReport) -> Dict[str, Any]:
    return {"artifact_id": report.artifact_id, "task_id": report.task_id,
            "results": [{"check_name": r.check_name, "passed": r.passed, "detail": r.detail}
                        for r in report.results]}


def report_from_dict(data: Mapping[str, Any]) -> ValidationReport:
    return ValidationReport(
        artifact_id=data["artifact_id"], task_id=data.get("task_id", ""),
        results=tuple(CheckResult(r["check_name"], bool(r["passed"]), r.get("detail", ""))
                      for r in data.get("results", [])))


def run_to_dict(run: PipelineRun) -> Dict[str, Any]:
    return {
        "run_id": run.run_id,
        "spec": spec_to_dict(run.spec),
        "graph": [task_to_dict(t) for t in run.graph.tasks()],
        "artifacts": [artifact_to_dict(a) for a in run.artifacts],
        "reports": [report_to_dict(r) for r in run.reports],
        "started_at_ms": run.started_at_ms,
        "finished_at_ms": run.finished_at_ms,
        "status": run.status.value if run.status else None,
        "seed": run.seed,
        "failure_reason": run.failure_reason,
        "wall_started_at": run.wall_started_at,
    }


def run_from_dict(data: Mapping[str, Any]) -> PipelineRun:
    return PipelineRun(
        run_id=data["run_id"],
        spec=spec_from_dict(data["spec"]),
        graph=TaskGraph.from_tasks(task_from_dict(t) for t in data["graph"]),
        artifacts=tuple(artifact_from_dict(a) for a in data["artifacts"]),
        reports=tuple(report_from_dict(r) for r in data["reports"]),
        started_at_ms=data["started_at_ms"],
        finished_at_ms=data["finished_at_ms"],
        status=RunStatus(data["status"]) if data.get("status") else None,
        seed=data["seed"],
        failure_reason=data.get("failure_reason"),
        wall_started_at=data.get("wall_started_at", ""),
    )


def save_run(run: PipelineRun, runs_dir: str) -> str:
    """Writes runs_dir/<run_id>.json and returns the path."""
    os.makedirs(runs_dir, exist_ok=True)
    path = os.path.join(runs_dir, f"{run.run_id}.json")
    with open(path, "w", encoding="utf-8") as f:
        json.dump(run_to_dict(run), f, indent=2, ensure_ascii=False)
    logger.info(f"Saved run {run.run_id} to {path}")
    return path


def load_run(path: str) -> PipelineRun:
    """Reads one run document. Raises OSError, ValueError (bad JSON) or KeyError (missing keys)."""
    with open(path, "r", encoding="utf-8") as f:
        data = json.load(f)
    if not isinstance(data, dict):
        raise ValueError(f"Run file {path} must hold a JSON object.")
    return run_from_dict(data)
