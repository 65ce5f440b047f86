"""
Task decomposition and scheduling primitives.

`decompose` turns a TaskSpec into a validated TaskGraph (via the planner in
modular mode), `compute_priorities` ranks tasks by unit-cost critical path and
`ready_set` selects what can run next.
"""
import logging
from dataclasses import replace
from typing import Dict, Iterable, List, Set

from agents.agent_loader import render_prompt
from agents.plan_parser import PlanEntry, parse_plan
from agents.prefrontal import FORMAT_REMINDER
from core.exceptions import MalformedPlanError
from core.model import (
    DEFAULT_MAX_ATTEMPTS,
    INTEGRATE_TASK_ID,
    MONOLITH_TASK_ID,
    PLAN_TASK_ID,
    AgentRole,
    PipelineMode,
    Task,
    TaskGraph,
    TaskKind,
    TaskSpec,
    TaskStatus,
    make_task,
    topological_order,
    validate_graph,
)

logger = logging.getLogger(__name__)

# An unusable plan reply gets this many reprompts (with FORMAT_REMINDER) before MalformedPlanError.
PLAN_REPROMPTS = 1


def plan_task_for(spec: TaskSpec, max_attempts: int = DEFAULT_MAX_ATTEMPTS) -> Task:
    return make_task(PLAN_TASK_ID, TaskKind.PLAN, spec.description,
                     max_attempts=max_attempts, complexity=spec.complexity)


def monolithic_graph(spec: TaskSpec, max_attempts: int = DEFAULT_MAX_ATTEMPTS) -> TaskGraph:
    """The single-task baseline graph."""
    task = make_task(MONOLITH_TASK_ID, TaskKind.MONOLITH, spec.description,
                     max_attempts=max_attempts, complexity=spec.complexity)
    return TaskGraph.from_tasks([task])


def expand_plan(plan_task: Task, entries: Iterable[PlanEntry], max_attempts: int = DEFAULT_MAX_ATTEMPTS) -> TaskGraph:
    """
    Builds the modular graph: the plan task as root, one task per plan entry
    (each also depending on the plan) and one integrate task.

    The integrate task depends on every implement task and on any subtask
    nothing else depends on, so every component is done before integration.

    Raises:
        GraphInvalidError (or a subclass): the resulting graph is not a valid DAG.
    """
    entries = list(entries)
    subtasks = [make_task(e.task_id, e.kind, e.description, deps={PLAN_TASK_ID, *e.deps},
                          max_attempts=max_attempts, complexity=plan_task.complexity)
                for e in entries]
    depended_on = {dep for e in entries for dep in e.deps}
    integrate_deps = [t.task_id for t in subtasks
                      if t.kind == TaskKind.IMPLEMENT or t.task_id not in depended_on]
    if not integrate_deps:
        integrate_deps = [t.task_id for t in subtasks]
    integrate_task = make_task(INTEGRATE_TASK_ID, TaskKind.INTEGRATE,
                               "Integrate the component artifacts into the final program.",
                               deps=integrate_deps, max_attempts=max_attempts)
    graph = TaskGraph.from_tasks([plan_task, *subtasks, integrate_task])
    validate_graph(graph, PipelineMode.MODULAR)
    return graph


def decompose(spec: TaskSpec, planner, max_attempts: int = DEFAULT_MAX_ATTEMPTS) -> TaskGraph:
    """
    Decomposes `spec` into a task graph.

    In monolithic mode this is a single monolith task. In modular mode the
    planner backend is asked for a JSON plan; an unparseable reply gets one
    reprompt with a format reminder before the error propagates.

    Raises:
        MalformedPlanError, UnknownKindError, DuplicateIdError, GraphInvalidError
    """
    if spec.mode == PipelineMode.MONOLITHIC:
        return monolithic_graph(spec, max_attempts)

    plan_task = plan_task_for(spec, max_attempts)
    prompt = render_prompt(AgentRole.PREFRONTAL, plan_task, {})
    entries = None
    for attempt in range(PLAN_REPROMPTS + 1):
        output = planner.invoke(prompt, AgentRole.PREFRONTAL, plan_task)
        try:
            if not output.ok:
                raise MalformedPlanError(f"planner failed: {output.error_detail}")
            entries = parse_plan(output.raw_text)
            break
        except MalformedPlanError as e:
            if attempt == PLAN_REPROMPTS:
                raise
            logger.warning(f"Plan for '{spec.spec_id}' unusable ({e}); reprompting with a format reminder.")
            prompt = f"{prompt}\n\n{FORMAT_REMINDER}"

    graph = expand_plan(plan_task, entries, max_attempts)
    logger.info(f"Decomposed '{spec.spec_id}' into {len(graph)} tasks: {graph.task_ids}")
    return graph


def compute_priorities(graph: TaskGraph) -> Dict[str, int]:
    """
    Priority of a task = node count of the longest dependency chain from it to
    any sink (unit-cost critical path). Raises GraphCycleError on cycles.
    """
    order = topological_order(graph)
    dependents = graph.dependents()
    priorities: Dict[str, int] = {}
    for task_id in reversed(order):
        children = dependents[task_id]
        priorities[task_id] = 1 + max((priorities[c] for c in children), default=0)
    return {task_id: priorities[task_id] for task_id in graph.nodes}


def with_priorities(graph: TaskGraph) -> TaskGraph:
    """Returns the graph with every task's priority set from compute_priorities."""
    priorities = compute_priorities(graph)
    return graph.with_tasks(replace(t, priority=priorities[t.task_id]) for t in graph.tasks())


def ready_set(graph: TaskGraph) -> Set[str]:
    """Ids of pending/ready tasks whose dependencies are all done."""
    ready = set()
    for task in graph.nodes.values():
        if task.status not in (TaskStatus.PENDING, TaskStatus.READY):
            continue
        if all(dep in graph.nodes and graph[dep].status == TaskStatus.DONE for dep in task.deps):
            ready.add(task.task_id)
    return ready


def dispatch_order(graph: TaskGraph, task_ids: Iterable[str]) -> List[str]:
    """Orders task ids by priority (descending), then graph insertion order."""
    position = {task_id: i for i, task_id in enumerate(graph.nodes)}
    return sorted(task_ids, key=lambda tid: (-graph[tid].priority, position[tid]))
