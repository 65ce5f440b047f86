import json
import random
from dataclasses import replace

import pytest

from agents.backends import AgentOutput
from agents.prefrontal import FORMAT_REMINDER
from core.exceptions import DuplicateIdError, GraphCycleError, MalformedPlanError
from core.model import (
    AgentRole,
    PipelineMode,
    TaskGraph,
    TaskKind,
    TaskSpec,
    TaskStatus,
    make_task,
)
from orchestrator.scheduler import compute_priorities, decompose, dispatch_order, ready_set, with_priorities


class ScriptedPlanner:
    """Returns the given replies in order and records every prompt."""

    def __init__(self, *replies):
        self.replies = list(replies)
        self.prompts = []

    def invoke(self, prompt, role, task):
        self.prompts.append(prompt)
        return AgentOutput(raw_text=self.replies.pop(0), latency_ms=0.0, ok=True)


def build_graph(edges):
    return TaskGraph.from_tasks(make_task(tid, TaskKind.IMPLEMENT, tid, deps=deps) for tid, deps in edges.items())


GOOD_PLAN = json.dumps({"subtasks": [
    {"id": "d1", "kind": "data_structures", "description": "grid", "depends_on": []},
    {"id": "m1", "kind": "implement", "description": "loop", "depends_on": ["d1"]},
]})


class TestDecompose:
    def test_pacman_mock_plan(self, pacman_spec, mock_backend_factory):
        graph = decompose(pacman_spec, mock_backend_factory())

        assert graph.task_ids == ["plan", "d1", "l1", "m1", "m2", "integrate"]
        assert graph["d1"].role == AgentRole.PARIETAL
        assert graph["l1"].role == AgentRole.TEMPORAL
        assert graph["m1"].role == AgentRole.MOTOR
        assert graph["d1"].deps == {"plan"}
        assert graph["l1"].deps == {"plan", "d1"}
        assert graph["m1"].deps == {"plan", "d1", "l1"}
        assert graph["m2"].deps == {"plan", "m1"}
        assert graph["integrate"].deps == {"m1", "m2"}
        assert graph.count_kind(TaskKind.INTEGRATE) == 1

    def test_monolithic(self, pacman_spec):
        spec = TaskSpec(spec_id="p", title="P", description=pacman_spec.description,
                        mode=PipelineMode.MONOLITHIC)
        graph = decompose(spec, planner=None)
        assert graph.task_ids == ["monolith"]
        assert graph["monolith"].role == AgentRole.MONOLITH

    def test_duplicate_ids(self, pacman_spec):
        plan = json.dumps({"subtasks": [{"id": "m1", "kind": "implement", "description": "a"},
                                        {"id": "m1", "kind": "implement", "description": "b"}]})
        with pytest.raises(DuplicateIdError):
            decompose(pacman_spec, ScriptedPlanner(plan))

    def test_reprompts_once_with_format_reminder(self, pacman_spec):
        planner = ScriptedPlanner("I would rather write prose.", GOOD_PLAN)
        graph = decompose(pacman_spec, planner)

        assert graph.task_ids == ["plan", "d1", "m1", "integrate"]
        assert len(planner.prompts) == 2
        assert FORMAT_REMINDER not in planner.prompts[0]
        assert planner.prompts[1].endswith(FORMAT_REMINDER)

    def test_second_malformed_reply_propagates(self, pacman_spec):
        with pytest.raises(MalformedPlanError):
            decompose(pacman_spec, ScriptedPlanner("nope", "still nope"))

    def test_sink_subtasks_feed_integrate(self, pacman_spec):
        plan = json.dumps({"subtasks": [
            {"id": "d1", "kind": "data_structures", "description": "grid"},
            {"id": "l1", "kind": "logic_review", "description": "rules"},
            {"id": "m1", "kind": "implement", "description": "loop", "depends_on": ["d1"]},
        ]})
        graph = decompose(pacman_spec, ScriptedPlanner(plan))
        assert graph["integrate"].deps == {"l1", "m1"}


def _longest_chain(edges, node, dependents):
    return 1 + max((_longest_chain(edges, child, dependents) for child in dependents[node]), default=0)


class TestPriorities:
    def test_single_task(self):
        assert compute_priorities(build_graph({"A": []})) == {"A": 1}

    def test_chain(self):
        graph = build_graph({"A": [], "B": ["A"], "C": ["B"]})
        assert compute_priorities(graph) == {"A": 3, "B": 2, "C": 1}

    def test_diamond(self):
        graph = build_graph({"A": [], "B": ["A"], "C": ["A"], "D": ["B", "C"]})
        assert compute_priorities(graph) == {"A": 3, "B": 2, "C": 2, "D": 1}

    def test_cycle(self):
        with pytest.raises(GraphCycleError):
            compute_priorities(build_graph({"A": ["B"], "B": ["A"]}))

    def test_matches_path_enumeration(self, random_dag):
        rng = random.Random(29)
        for _ in range(500):
            edges = random_dag(rng, 10)
            dependents = {tid: [c for c, deps in edges.items() if tid in deps] for tid in edges}
            expected = {tid: _longest_chain(edges, tid, dependents) for tid in edges}
            assert compute_priorities(build_graph(edges)) == expected

    def test_with_priorities_sets_fields(self):
        graph = with_priorities(build_graph({"A": [], "B": ["A"]}))
        assert (graph["A"].priority, graph["B"].priority) == (2, 1)


class TestReadySet:
    def test_fresh_chain(self):
        assert ready_set(build_graph({"A": [], "B": ["A"], "C": ["B"]})) == {"A"}

    def test_after_first_done(self):
        graph = build_graph({"A": [], "B": ["A"], "C": ["B"]})
        graph = graph.with_task(replace(graph["A"], status=TaskStatus.DONE, attempts=1))
        assert ready_set(graph) == {"B"}

    def test_diamond(self):
        assert ready_set(build_graph({"A": [], "B": ["A"], "C": ["A"], "D": ["B", "C"]})) == {"A"}

    def test_running_tasks_are_not_ready(self):
        graph = build_graph({"A": [], "B": []})
        graph = graph.with_task(replace(graph["A"], status=TaskStatus.RUNNING, attempts=1))
        assert ready_set(graph) == {"B"}

    def test_dispatch_order(self):
        graph = with_priorities(build_graph({"A": [], "B": [], "C": ["B"], "D": []}))
        assert dispatch_order(graph, {"A", "B", "D"}) == ["B", "A", "D"]
