"""
The coordinator that drives a PipelineRun to completion.

One coordinator loop owns the graph and the agent pool (single writer). Ready
tasks are dispatched in (priority desc, insertion order) order, each to the
least-loaded agent of its role: the coordinator sends an `assign` message and
submits a worker to a thread pool bounded by the concurrency limit. The worker
receives the assignment, renders the role's prompt from the blackboard,
invokes the backend (or integrates, for the Orchestrator role), writes the
artifact to the blackboard, validates it and replies with a `result` (or
`error`) message. Failed attempts are re-readied with a failure summary until
max_attempts is reached; an unusable plan reply is reprompted only
PLAN_REPROMPTS times, with the format reminder in its feedback.
"""
import json
import logging
import threading
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

from agents.agent_loader import AGENT_CLASS_MAP
from agents.plan_parser import parse_plan
from agents.prefrontal import FORMAT_REMINDER
from comms.blackboard import Blackboard, task_key
from comms.message_bus import MessageBus, MessageKind
from core.exceptions import ConfigError, CortexError, NoAgentForRoleError
from core.logging_config import RunEventLogger
from core.model import (
    DEFAULT_MAX_ATTEMPTS,
    AgentProfile,
    AgentRole,
    Artifact,
    CheckSpec,
    PipelineMode,
    PipelineRun,
    RunStatus,
    Task,
    TaskEvent,
    TaskGraph,
    TaskKind,
    TaskSpec,
    TaskStatus,
    ValidationReport,
    artifact_from_dict,
    artifact_to_dict,
    monotonic_ms,
    report_from_dict,
    report_to_dict,
    transition,
    validate_graph,
)
from integration.integrator import FailureSummary, artifacts_for, build_feedback, integrate
from integration.validators import DEFAULT_CHECK_TIMEOUT_S, ScriptFn, validate_artifact
from orchestrator.load_balancer import assign, parse_agent_pool, update_analytics
from orchestrator.scheduler import (
    PLAN_REPROMPTS,
    dispatch_order,
    expand_plan,
    monolithic_graph,
    plan_task_for,
    ready_set,
    with_priorities,
)

logger = logging.getLogger(__name__)

COORDINATOR_ID = "orchestrator"
WORKER_RECEIVE_TIMEOUT_MS = 5000

REQUIRED_ROLES = {
    PipelineMode.MODULAR: (AgentRole.ORCHESTRATOR, AgentRole.PREFRONTAL),
    PipelineMode.MONOLITHIC: (AgentRole.MONOLITH,),
}


def default_agent_pool() -> Tuple[AgentProfile, ...]:
    from load_cfg import CORTEXC_AGENT_POOL
    return tuple(parse_agent_pool(CORTEXC_AGENT_POOL))


@dataclass(frozen=True)
class OrchestratorConfig:
    concurrency_limit: int = 4
    max_attempts: int = DEFAULT_MAX_ATTEMPTS
    ema_alpha: float = 0.2
    agent_pool: Tuple[AgentProfile, ...] = field(default_factory=default_agent_pool)
    poll_interval_ms: float = 50.0

    def __post_init__(self):
        if self.concurrency_limit < 1:
            raise ConfigError(f"concurrency_limit must be positive, got {self.concurrency_limit}.")
        if self.max_attempts < 1:
            raise ConfigError(f"max_attempts must be positive, got {self.max_attempts}.")
        if not 0 < self.ema_alpha <= 1:
            raise ConfigError(f"ema_alpha must be in (0, 1], got {self.ema_alpha}.")
        ids = [p.agent_id for p in self.agent_pool]
        if len(ids) != len(set(ids)):
            raise ConfigError(f"Duplicate agent ids in pool: {ids}")
        if COORDINATOR_ID in ids:
            raise ConfigError(f"'{COORDINATOR_ID}' is reserved for the coordinator.")

    def check_roles(self, mode: PipelineMode):
        """Raises NoAgentForRoleError if a role every run of `mode` needs is missing."""
        roles = {p.role for p in self.agent_pool}
        for role in REQUIRED_ROLES[mode]:
            if role not in roles:
                raise NoAgentForRoleError(role.value)


@dataclass(frozen=True)
class _Dispatch:
    """Everything a worker needs for one attempt, captured by the coordinator at dispatch time."""
    run_id: str
    agent_id: str
    task: Task
    checks: Tuple[CheckSpec, ...]
    failure_summary: str = ""
    graph: Optional[TaskGraph] = None
    inputs: Tuple[Artifact, ...] = ()

    @property
    def artifact_id(self) -> str:
        return f"{self.run_id}:{self.task.task_id}:{self.task.attempts}"


@dataclass
class _RunState:
    """Coordinator-owned mutable state of one run. Never touched by workers."""
    run_id: str
    spec: TaskSpec
    graph: TaskGraph
    pool: Dict[str, AgentProfile]
    expand_plan: bool = False
    running: Dict[str, str] = field(default_factory=dict)
    futures: Dict[str, Future] = field(default_factory=dict)
    artifacts: Dict[str, Artifact] = field(default_factory=dict)
    reports: List[ValidationReport] = field(default_factory=list)
    feedback: Dict[str, str] = field(default_factory=dict)
    failure_reason: Optional[str] = None
    dispatches: int = 0
    plan_format_failures: int = 0


class Orchestrator:
    """Coordinates agents over a message bus and a blackboard for one run at a time."""

    def __init__(self, config: OrchestratorConfig, backends, bus: Optional[MessageBus] = None,
                 board: Optional[Blackboard] = None, events: Optional[RunEventLogger] = None,
                 scripts: Optional[Mapping[str, ScriptFn]] = None,
                 check_timeout_s: float = DEFAULT_CHECK_TIMEOUT_S):
        """
        Args:
            config: Concurrency, retry and pool settings.
            backends: One backend for every role, or a mapping AgentRole -> backend.
            bus / board: Shared communication services; fresh ones are created when omitted.
            events: Run-event log; an in-memory one is created when omitted.
            scripts: Script table for `scripted` checks.
            check_timeout_s: Per-check timeout for `external_command` checks.
        """
        self.config = config
        self.backends = backends
        self.bus = bus if bus is not None else MessageBus()
        self.board = board if board is not None else Blackboard()
        self.events = events if events is not None else RunEventLogger()
        self.scripts = scripts
        self.check_timeout_s = check_timeout_s
        self.peak_running = 0
        self._contexts: Dict[Tuple[str, str], _Dispatch] = {}
        self._contexts_lock = threading.Lock()
        self._agents = {role: agent_class(self.backend_for(role)) for role, agent_class in AGENT_CLASS_MAP.items()}

    def backend_for(self, role: AgentRole):
        if isinstance(self.backends, Mapping):
            return self.backends.get(role)
        return self.backends

    # --- public entry points ---

    def run_pipeline(self, spec: TaskSpec, run_id: str, seed: int = 0) -> PipelineRun:
        """Runs `spec` end to end in its mode and returns the finished run record."""
        started_at = monotonic_ms()
        wall_started_at = datetime.now(timezone.utc).isoformat()
        if spec.mode == PipelineMode.MODULAR:
            graph = TaskGraph.from_tasks([plan_task_for(spec, self.config.max_attempts)])
        else:
            graph = monolithic_graph(spec, self.config.max_attempts)
        try:
            self.config.check_roles(spec.mode)
        except NoAgentForRoleError as e:
            logger.error(f"Run {run_id} cannot start: {e}")
            return PipelineRun(run_id=run_id, spec=spec, graph=graph, started_at_ms=started_at,
                               finished_at_ms=monotonic_ms(), status=RunStatus.FAILED, seed=seed,
                               failure_reason=str(e), wall_started_at=wall_started_at)
        return self.execute_graph(graph, spec, run_id, seed=seed,
                                  expand_plan=spec.mode == PipelineMode.MODULAR,
                                  started_at_ms=started_at, wall_started_at=wall_started_at)

    def execute_graph(self, graph: TaskGraph, spec: TaskSpec, run_id: str, seed: int = 0,
                      expand_plan: bool = False, started_at_ms: Optional[float] = None,
                      wall_started_at: Optional[str] = None) -> PipelineRun:
        """
        Executes an already-built graph. With `expand_plan`, the completed plan
        task's artifact is parsed and the graph is expanded before continuing.
        """
        started_at = monotonic_ms() if started_at_ms is None else started_at_ms
        wall_started_at = wall_started_at or datetime.now(timezone.utc).isoformat()
        state = _RunState(run_id=run_id, spec=spec, graph=graph,
                          pool={p.agent_id: p for p in self.config.agent_pool}, expand_plan=expand_plan)
        logger.info(f"Run {run_id}: starting {spec.mode.value} pipeline for '{spec.spec_id}' "
                    f"with {len(state.pool)} agents, concurrency {self.config.concurrency_limit}")

        self.bus.register(COORDINATOR_ID)
        self.bus.drain(COORDINATOR_ID)
        for agent_id in state.pool:
            self.bus.register(agent_id)

        try:
            validate_graph(state.graph)
            state.graph = with_priorities(state.graph)
            self._drive(state)
        except CortexError as e:
            logger.error(f"Run {run_id} failed: {e}")
            state.failure_reason = state.failure_reason or str(e)
        except Exception as e:
            logger.exception(f"Run {run_id} crashed in the coordinator")
            state.failure_reason = state.failure_reason or f"internal error: {type(e).__name__}: {e}"

        succeeded = state.failure_reason is None and self._final_done(state.graph)
        if state.failure_reason is None and not succeeded:
            state.failure_reason = "graph-stall"
        run = PipelineRun(
            run_id=run_id, spec=spec, graph=state.graph,
            artifacts=tuple(state.artifacts[tid] for tid in state.graph.nodes if tid in state.artifacts),
            reports=tuple(state.reports), started_at_ms=started_at, finished_at_ms=monotonic_ms(),
            status=RunStatus.SUCCEEDED if succeeded else RunStatus.FAILED, seed=seed,
            failure_reason=None if succeeded else state.failure_reason, wall_started_at=wall_started_at,
        )
        logger.info(f"Run {run_id} {run.status.value} after {state.dispatches} dispatches "
                    f"in {run.finished_at_ms - run.started_at_ms:.0f} ms")
        return run

    # --- coordinator ---

    def _drive(self, state: _RunState):
        with ThreadPoolExecutor(max_workers=self.config.concurrency_limit,
                                thread_name_prefix="cortex-agent") as executor:
            while True:
                self._promote(state)
                if state.failure_reason is None:
                    self._dispatch_ready(state, executor)
                if not state.running:
                    break
                message = self.bus.receive(COORDINATOR_ID, timeout_ms=self.config.poll_interval_ms)
                if message is None:
                    self._reap_crashed_workers(state)
                    continue
                try:
                    data = json.loads(message.payload) if message.payload else {}
                except json.JSONDecodeError:
                    data = {"error": f"unreadable reply: {message.payload[:200]}"}
                self._handle_outcome(state, message.task_id, message.kind, data)

        if state.failure_reason is None and not all(t.is_terminal for t in state.graph.tasks()):
            blocked = [tid for tid, t in state.graph.nodes.items() if not t.is_terminal]
            self.events.emit("stalled", blocked[0], None, f"no runnable task; blocked: {blocked}")
            state.failure_reason = f"graph-stall: blocked tasks {blocked}"

    def _promote(self, state: _RunState):
        for task_id in ready_set(state.graph):
            task = state.graph[task_id]
            if task.status == TaskStatus.PENDING:
                state.graph = state.graph.with_task(transition(task, TaskEvent.DEPS_MET))

    def _dispatch_ready(self, state: _RunState, executor: ThreadPoolExecutor):
        ready = [tid for tid, t in state.graph.nodes.items() if t.status == TaskStatus.READY]
        for task_id in dispatch_order(state.graph, ready):
            if len(state.running) >= self.config.concurrency_limit:
                return
            task = state.graph[task_id]
            try:
                agent_id = assign(task, state.pool.values())
            except NoAgentForRoleError as e:
                self.events.emit("failed", task_id, None, str(e))
                state.failure_reason = str(e)
                return
            if agent_id is None:
                continue
            self._dispatch(state, executor, task, agent_id)

    def _dispatch(self, state: _RunState, executor: ThreadPoolExecutor, task: Task, agent_id: str):
        task = transition(task, TaskEvent.DISPATCHED)
        state.graph = state.graph.with_task(task)
        profile = state.pool[agent_id]
        state.pool[agent_id] = replace(profile, in_flight=profile.in_flight + 1)

        dispatch = _Dispatch(
            run_id=state.run_id, agent_id=agent_id, task=task, checks=state.spec.checks,
            failure_summary=state.feedback.get(task.task_id, ""),
            graph=state.graph if task.kind == TaskKind.INTEGRATE else None,
            inputs=tuple(artifacts_for(state.graph, state.artifacts)) if task.kind == TaskKind.INTEGRATE else (),
        )
        with self._contexts_lock:
            self._contexts[(agent_id, task.task_id)] = dispatch
        state.running[task.task_id] = agent_id
        state.dispatches += 1
        self.peak_running = max(self.peak_running, len(state.running))

        self.events.emit("dispatched", task.task_id, agent_id, f"attempt {task.attempts}/{task.max_attempts}")
        self.bus.send(COORDINATOR_ID, agent_id, MessageKind.ASSIGN, task.task_id,
                      json.dumps({"attempt": task.attempts}))
        state.futures[task.task_id] = executor.submit(self._work, agent_id)

    def _reap_crashed_workers(self, state: _RunState):
        for task_id, future in list(state.futures.items()):
            if future.done() and future.exception() is not None and task_id in state.running:
                error = future.exception()
                self._handle_outcome(state, task_id, MessageKind.ERROR,
                                     {"error": f"worker crashed: {type(error).__name__}: {error}"})

    def _handle_outcome(self, state: _RunState, task_id: str, kind: MessageKind, data: Dict[str, Any]):
        if task_id not in state.running:
            logger.warning(f"Run {state.run_id}: ignoring reply for task '{task_id}' that is not running")
            return
        agent_id = state.running.pop(task_id)
        state.futures.pop(task_id, None)
        profile = state.pool[agent_id]
        profile = replace(profile, in_flight=profile.in_flight - 1)
        task = state.graph[task_id]
        latency_ms = max(0.0, float(data.get("latency_ms", 0.0)))

        summary: Optional[FailureSummary] = None
        exhaust = False
        if kind == MessageKind.ERROR:
            summary = FailureSummary(task_id, task.attempts, (("agent-error", str(data.get("error", "unknown"))),))
        elif not data.get("ok"):
            summary = FailureSummary(task_id, task.attempts, (("backend", str(data.get("error", "unknown"))),))
        else:
            artifact = artifact_from_dict(data["artifact"])
            report = report_from_dict(data["report"])
            state.artifacts[task_id] = artifact
            state.reports.append(report)
            if not report.passed:
                summary = build_feedback(task, report)
            elif task.kind == TaskKind.PLAN and state.expand_plan:
                summary = self._expand(state, task, artifact)
                if summary is not None:
                    # Unusable plans get PLAN_REPROMPTS reprompts regardless of max_attempts.
                    state.plan_format_failures += 1
                    exhaust = state.plan_format_failures > PLAN_REPROMPTS

        state.pool[agent_id] = update_analytics(profile, latency_ms, summary is None, self.config.ema_alpha)
        if summary is None:
            state.graph = state.graph.with_task(transition(state.graph[task_id], TaskEvent.COMPLETED))
            state.feedback.pop(task_id, None)
            self.events.emit("completed", task_id, agent_id, f"attempt {task.attempts}")
        else:
            self._fail_attempt(state, state.graph[task_id], agent_id, summary, exhaust=exhaust)

    def _expand(self, state: _RunState, plan_task: Task, artifact: Artifact) -> Optional[FailureSummary]:
        """Expands the graph from the plan artifact; returns feedback if the plan is unusable."""
        try:
            entries = parse_plan(artifact.content)
            done_plan = replace(plan_task, status=TaskStatus.DONE)
            state.graph = with_priorities(expand_plan(done_plan, entries, self.config.max_attempts))
            state.graph = state.graph.with_task(plan_task)  # completion is applied by the caller
        except CortexError as e:
            logger.warning(f"Run {state.run_id}: plan attempt {plan_task.attempts} unusable: {e}")
            return FailureSummary(plan_task.task_id, plan_task.attempts, (("plan-format", f"{e}. {FORMAT_REMINDER}"),))
        logger.info(f"Run {state.run_id}: plan expanded into {len(state.graph)} tasks {state.graph.task_ids}")
        return None

    def _fail_attempt(self, state: _RunState, task: Task, agent_id: str, summary: FailureSummary,
                      exhaust: bool = False):
        names = [name for name, _ in summary.failed_checks]
        if task.attempts < task.max_attempts and not exhaust:
            state.graph = state.graph.with_task(transition(task, TaskEvent.CHECK_FAILED_RETRY))
            state.feedback[task.task_id] = summary.render()
            self.events.emit("retried", task.task_id, agent_id, f"attempt {task.attempts} failed {names}")
        else:
            state.graph = state.graph.with_task(transition(task, TaskEvent.EXHAUSTED))
            self.events.emit("failed", task.task_id, agent_id, f"exhausted after {task.attempts} attempts {names}")
            if state.failure_reason is None:
                state.failure_reason = f"task '{task.task_id}' failed after {task.attempts} attempts: {names}"

    @staticmethod
    def _final_done(graph: TaskGraph) -> bool:
        finals = [t for t in graph.tasks() if t.kind in (TaskKind.INTEGRATE, TaskKind.MONOLITH)]
        if finals:
            return all(t.status == TaskStatus.DONE for t in finals)
        return len(graph) > 0 and all(t.status == TaskStatus.DONE for t in graph.tasks())

    # --- workers ---

    def _work(self, agent_id: str):
        message = self.bus.receive(agent_id, timeout_ms=WORKER_RECEIVE_TIMEOUT_MS)
        if message is None:
            raise RuntimeError(f"agent '{agent_id}' received no assignment")
        with self._contexts_lock:
            dispatch = self._contexts.pop((agent_id, message.task_id))
        task_id = dispatch.task.task_id
        try:
            kind, payload = MessageKind.RESULT, json.dumps(self._execute(dispatch))
        except Exception as e:
            logger.warning(f"Agent {agent_id} failed on task '{task_id}': {type(e).__name__}: {e}")
            kind, payload = MessageKind.ERROR, json.dumps({"error": f"{type(e).__name__}: {e}"})
        try:
            self.bus.send(agent_id, COORDINATOR_ID, kind, task_id, payload)
        except CortexError as e:
            self.bus.send(agent_id, COORDINATOR_ID, MessageKind.ERROR, task_id,
                          json.dumps({"error": f"{type(e).__name__}: {e}"}))

    def _execute(self, dispatch: _Dispatch) -> Dict[str, Any]:
        task = dispatch.task
        if task.role == AgentRole.ORCHESTRATOR:
            start = monotonic_ms()
            artifact = integrate(dispatch.inputs, dispatch.graph, artifact_id=dispatch.artifact_id)
            latency_ms = monotonic_ms() - start
        else:
            agent = self._agents.get(task.role)
            if agent is None or agent.backend is None:
                raise ConfigError(f"no agent implementation or backend for role '{task.role.value}'")
            output = agent.run(task, self.board.values(), dispatch.failure_summary)
            if not output.ok:
                return {"ok": False, "latency_ms": output.latency_ms, "error": output.error_detail}
            if not output.raw_text.strip():
                return {"ok": False, "latency_ms": output.latency_ms, "error": "empty output"}
            artifact = Artifact(artifact_id=dispatch.artifact_id, task_id=task.task_id, role=task.role,
                                content=output.raw_text, content_kind=task.content_kind,
                                created_at_ms=monotonic_ms())
            latency_ms = output.latency_ms

        self.board.write(task_key(task.task_id, artifact.content_kind.value), artifact.content, dispatch.agent_id)
        report = validate_artifact(artifact, dispatch.checks, self.scripts, self.check_timeout_s)
        return {"ok": True, "latency_ms": latency_ms,
                "artifact": artifact_to_dict(artifact), "report": report_to_dict(report)}


def run_pipeline(spec: TaskSpec, config: OrchestratorConfig, backends, bus: Optional[MessageBus] = None,
                 board: Optional[Blackboard] = None, run_id: Optional[str] = None, seed: int = 0,
                 events: Optional[RunEventLogger] = None,
                 scripts: Optional[Mapping[str, ScriptFn]] = None) -> PipelineRun:
    """Functional entry point: builds an Orchestrator and runs `spec` once."""
    orchestrator = Orchestrator(config, backends, bus=bus, board=board, events=events, scripts=scripts)
    return orchestrator.run_pipeline(spec, run_id or spec.spec_id, seed=seed)
