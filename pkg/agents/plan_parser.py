"""Parses planner output into subtask entries."""
import json
import logging
from dataclasses import dataclass
from typing import List, Tuple

from core.exceptions import DuplicateIdError, MalformedPlanError, UnknownKindError
from core.model import INTEGRATE_TASK_ID, MONOLITH_TASK_ID, PLAN_TASK_ID, TaskKind
from tools.file_wrapper import extract_json_blocks

logger = logging.getLogger(__name__)

SUBTASK_KINDS = (TaskKind.DATA_STRUCTURES, TaskKind.LOGIC_REVIEW, TaskKind.IMPLEMENT)
RESERVED_IDS = frozenset({PLAN_TASK_ID, INTEGRATE_TASK_ID, MONOLITH_TASK_ID})


@dataclass(frozen=True)
class PlanEntry:
    task_id: str
    kind: TaskKind
    description: str
    deps: Tuple[str, ...] = ()


def parse_plan(raw_text: str) -> List[PlanEntry]:
    """
    Reads the single JSON object with a "subtasks" list out of `raw_text`.
    Surrounding prose and ```json fences are tolerated.

    Raises:
        MalformedPlanError: no (or more than one) plan object, or an entry misses a key.
        UnknownKindError: a kind outside data_structures / logic_review / implement.
        DuplicateIdError: an id repeats or uses a reserved id (plan, integrate, monolith).
    """
    candidates = []
    for block in extract_json_blocks(raw_text or ""):
        data = json.loads(block)
        if isinstance(data, dict) and "subtasks" in data:
            candidates.append(data)
    if not candidates:
        raise MalformedPlanError("no JSON object with a 'subtasks' key found")
    if len(candidates) > 1:
        raise MalformedPlanError(f"expected exactly one plan object, found {len(candidates)}")

    subtasks = candidates[0]["subtasks"]
    if not isinstance(subtasks, list) or not subtasks:
        raise MalformedPlanError("'subtasks' must be a non-empty list")

    entries: List[PlanEntry] = []
    seen = set()
    for index, item in enumerate(subtasks):
        if not isinstance(item, dict):
            raise MalformedPlanError(f"subtask #{index} is not an object")
        missing = [k for k in ("id", "kind", "description") if k not in item]
        if missing:
            raise MalformedPlanError(f"subtask #{index} is missing {missing}")
        task_id, kind, description = item["id"], item["kind"], item["description"]
        deps = item.get("depends_on", [])
        if not isinstance(task_id, str) or not task_id.strip():
            raise MalformedPlanError(f"subtask #{index} has an empty or non-string id")
        if not isinstance(description, str):
            raise MalformedPlanError(f"subtask '{task_id}' has a non-string description")
        if not isinstance(deps, list) or not all(isinstance(d, str) for d in deps):
            raise MalformedPlanError(f"subtask '{task_id}' depends_on must be a list of ids")
        if kind not in {k.value for k in SUBTASK_KINDS}:
            raise UnknownKindError(str(kind))
        if task_id in seen or task_id in RESERVED_IDS:
            raise DuplicateIdError(task_id)
        seen.add(task_id)
        entries.append(PlanEntry(task_id=task_id, kind=TaskKind(kind), description=description,
                                 deps=tuple(deps)))

    logger.debug(f"Parsed plan with {len(entries)} subtasks: {[e.task_id for e in entries]}")
    return entries
