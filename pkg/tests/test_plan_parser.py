import json

import pytest

from agents.plan_parser import PlanEntry, parse_plan
from core.exceptions import DuplicateIdError, MalformedPlanError, UnknownKindError
from core.model import TaskKind

PLAN = {"subtasks": [
    {"id": "d1", "kind": "data_structures", "description": "grid", "depends_on": []},
    {"id": "m1", "kind": "implement", "description": "loop", "depends_on": ["d1"]},
]}


def test_plain_json():
    assert parse_plan(json.dumps(PLAN)) == [
        PlanEntry("d1", TaskKind.DATA_STRUCTURES, "grid", ()),
        PlanEntry("m1", TaskKind.IMPLEMENT, "loop", ("d1",)),
    ]


def test_fenced_json():
    entries = parse_plan(f"```json\n{json.dumps(PLAN)}\n```")
    assert [e.task_id for e in entries] == ["d1", "m1"]


def test_surrounding_prose():
    entries = parse_plan(f"Here is the plan you asked for:\n{json.dumps(PLAN)}\nGood luck!")
    assert [e.task_id for e in entries] == ["d1", "m1"]


def test_depends_on_is_optional():
    entries = parse_plan('{"subtasks": [{"id": "m1", "kind": "implement", "description": "loop"}]}')
    assert entries[0].deps == ()


@pytest.mark.parametrize("text", ["", "no json here", "[1, 2, 3]", '{"tasks": []}', '{"subtasks": []}',
                                  '{"subtasks": "d1"}', '{"subtasks": [{"id": "d1", "kind": "implement"}]}',
                                  '{"subtasks": [42]}'])
def test_malformed(text):
    with pytest.raises(MalformedPlanError):
        parse_plan(text)


def test_two_plan_objects():
    with pytest.raises(MalformedPlanError):
        parse_plan(f"{json.dumps(PLAN)}\nor maybe\n{json.dumps(PLAN)}")


def test_unknown_kind():
    with pytest.raises(UnknownKindError) as excinfo:
        parse_plan('{"subtasks": [{"id": "x", "kind": "deploy", "description": "ship it"}]}')
    assert excinfo.value.kind == "deploy"


def test_duplicate_id():
    text = ('{"subtasks": [{"id": "m1", "kind": "implement", "description": "a"},'
            ' {"id": "m1", "kind": "implement", "description": "b"}]}')
    with pytest.raises(DuplicateIdError) as excinfo:
        parse_plan(text)
    assert excinfo.value.task_id == "m1"


@pytest.mark.parametrize("reserved", ["plan", "integrate", "monolith"])
def test_reserved_ids(reserved):
    with pytest.raises(DuplicateIdError):
        parse_plan(f'{{"subtasks": [{{"id": "{reserved}", "kind": "implement", "description": "a"}}]}}')
