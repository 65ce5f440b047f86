import os
import random
import tempfile

# Settings are read from the environment when load_cfg is first imported.
_TEST_ROOT = tempfile.mkdtemp(prefix="cortex-tests-")
os.environ["WORKING_DIRECTORY"] = os.path.join(_TEST_ROOT, "work")
os.environ["LOG_DIRECTORY"] = os.path.join(_TEST_ROOT, "logs")
os.environ["CORTEXC_BACKEND"] = "mock"
os.environ["CORTEXC_ENDPOINT"] = ""
os.environ["CORTEXC_MOCK_LATENCY_MS"] = "0"
os.environ.pop("CORTEXC_API_KEY", None)

import pytest  # noqa: E402

from agents.backends import BackendConfig, BackendKind, MockBackend  # noqa: E402
from comms.blackboard import Blackboard  # noqa: E402
from core.model import TaskGraph, TaskKind, load_task_spec, make_task  # noqa: E402
from orchestrator.load_balancer import parse_agent_pool  # noqa: E402

REPO_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
SPECS_DIR = os.path.join(REPO_ROOT, "task_specs")
GOLDEN_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "golden")

STANDARD_POOL = "toa:Orchestrator:1,pfc:Prefrontal:1,par:Parietal:1,tmp:Temporal:1,mot1:Motor:1,mot2:Motor:1,mono:Monolith:1"


@pytest.fixture
def specs_dir():
    return SPECS_DIR


@pytest.fixture
def golden_dir():
    return GOLDEN_DIR


@pytest.fixture
def pacman_spec():
    return load_task_spec(os.path.join(SPECS_DIR, "pacman.json"))


@pytest.fixture
def standard_pool():
    return tuple(parse_agent_pool(STANDARD_POOL))


@pytest.fixture
def mock_backend_factory():
    def factory(seed=7, latency_ms=0.0, failure_plan=None):
        return MockBackend(BackendConfig(kind=BackendKind.MOCK, seed=seed, mock_latency_ms=latency_ms,
                                         failure_plan=dict(failure_plan or {})))
    return factory


@pytest.fixture
def plan_board():
    """A blackboard that already holds a plan, for graphs executed without a planning phase."""
    board = Blackboard()
    board.write("plan/plan", '{"subtasks": []}', "test")
    return board


def build_graph(edges, kind=TaskKind.IMPLEMENT):
    """edges: mapping task_id -> iterable of dependency ids, in insertion order."""
    return TaskGraph.from_tasks(make_task(task_id, kind, f"task {task_id}", deps=deps)
                                for task_id, deps in edges.items())


def random_dag_edges(rng: random.Random, max_nodes: int):
    """Random DAG: node i may only depend on nodes created before it."""
    n = rng.randint(1, max_nodes)
    ids = [f"t{i}" for i in range(n)]
    density = rng.random()
    return {ids[i]: [ids[j] for j in range(i) if rng.random() < density * 0.5] for i in range(n)}


@pytest.fixture
def graph_builder():
    return build_graph


@pytest.fixture
def random_dag():
    return random_dag_edges
