import os

import pytest

from core.exceptions import MissingArtifactError, NoFailuresError
from core.model import (
    AgentRole,
    Artifact,
    CheckMethod,
    CheckResult,
    CheckSpec,
    ContentKind,
    PipelineRun,
    RunStatus,
    TaskGraph,
    TaskKind,
    TaskSpec,
    ValidationReport,
    make_task,
)
from integration.integrator import FailureSummary, build_feedback, integrate, section_header, write_outputs
from integration.validators import validate_artifact


def _artifact(task_id="m1", content="# MOCK-IMPL m1\ndef m1(state):\n    return state\n",
              kind=ContentKind.CODE, role=AgentRole.MOTOR):
    return Artifact(artifact_id=f"run:{task_id}:1", task_id=task_id, role=role, content=content,
                    content_kind=kind, created_at_ms=1.0)


def _check(name, method, argument, applies_to=(ContentKind.CODE, ContentKind.INTEGRATED_CODE)):
    return CheckSpec(name=name, method=method, argument=argument, applies_to=applies_to)


class TestValidateArtifact:
    def test_contains_text(self):
        report = validate_artifact(_artifact(), [_check("defines", CheckMethod.CONTAINS_TEXT, "def "),
                                                 _check("tests", CheckMethod.CONTAINS_TEXT, "def test_")])
        assert [(r.check_name, r.passed) for r in report.results] == [("defines", True), ("tests", False)]
        assert not report.passed
        assert report.task_id == "m1"

    def test_no_checks_passes(self):
        report = validate_artifact(_artifact(), [])
        assert report.results == ()
        assert report.passed

    def test_applies_to_filters_checks(self):
        plan = _artifact("plan", '{"subtasks": []}', ContentKind.PLAN, AgentRole.PREFRONTAL)
        report = validate_artifact(plan, [_check("defines", CheckMethod.CONTAINS_TEXT, "def ")])
        assert report.results == ()

    def test_external_command_exit_status(self):
        report = validate_artifact(_artifact(), [_check("ok", CheckMethod.EXTERNAL_COMMAND, "true"),
                                                 _check("bad", CheckMethod.EXTERNAL_COMMAND, "false")])
        assert [r.passed for r in report.results] == [True, False]
        assert "exit status 1" in report.results[1].detail

    def test_external_command_reads_stdin(self):
        artifact = _artifact()
        passing = validate_artifact(artifact, [_check("grep", CheckMethod.EXTERNAL_COMMAND, "grep -q MOCK-IMPL")])
        failing = validate_artifact(artifact, [_check("grep", CheckMethod.EXTERNAL_COMMAND, "grep -q NOPE")])
        assert passing.passed
        assert not failing.passed

    def test_external_command_gets_task_id(self):
        check = _check("task-id", CheckMethod.EXTERNAL_COMMAND, "sh -c 'test \"$0\" = m1'")
        assert validate_artifact(_artifact("m1"), [check]).passed
        assert not validate_artifact(_artifact("m2"), [check]).passed

    def test_spawn_failure(self):
        report = validate_artifact(_artifact(), [_check("x", CheckMethod.EXTERNAL_COMMAND,
                                                        "definitely-not-a-command-xyz")])
        assert not report.passed
        assert report.results[0].detail.startswith("spawn failed")

    def test_timeout(self):
        report = validate_artifact(_artifact(), [_check("slow", CheckMethod.EXTERNAL_COMMAND, "sleep 5")],
                                   timeout_s=0.2)
        assert not report.passed
        assert "timed out" in report.results[0].detail

    def test_scripted(self):
        checks = [_check("s", CheckMethod.SCRIPTED, "length")]
        report = validate_artifact(_artifact(), checks, scripts={"length": lambda a: (len(a.content) > 5, "long")})
        assert report.passed
        assert report.results[0].detail == "long"

    def test_missing_script(self):
        report = validate_artifact(_artifact(), [_check("s", CheckMethod.SCRIPTED, "nothing")], scripts={})
        assert not report.passed

    def test_artifact_is_not_modified(self):
        artifact = _artifact()
        validate_artifact(artifact, [_check("defines", CheckMethod.CONTAINS_TEXT, "def ")])
        assert artifact == _artifact()


def _modular_graph():
    return TaskGraph.from_tasks([
        make_task("plan", TaskKind.PLAN, "plan"),
        make_task("m1", TaskKind.IMPLEMENT, "loop", deps={"plan", "d1"}),
        make_task("d1", TaskKind.DATA_STRUCTURES, "schema", deps={"plan"}),
        make_task("integrate", TaskKind.INTEGRATE, "integrate", deps={"m1"}),
    ])


def _modular_artifacts():
    return [
        _artifact("m1"),
        _artifact("plan", '{"subtasks": []}\nsecond line', ContentKind.PLAN, AgentRole.PREFRONTAL),
        _artifact("d1", "class GameState: grid", ContentKind.SCHEMA, AgentRole.PARIETAL),
    ]


class TestIntegrate:
    def test_sections_follow_topological_order(self):
        content = integrate(_modular_artifacts(), _modular_graph()).content
        positions = [content.index(section_header(tid, role)) for tid, role in
                     (("plan", AgentRole.PREFRONTAL), ("d1", AgentRole.PARIETAL), ("m1", AgentRole.MOTOR))]
        assert positions == sorted(positions)
        assert content.count("=== ") == 3

    def test_plan_and_schema_are_commented(self):
        content = integrate(_modular_artifacts(), _modular_graph()).content
        assert '# {"subtasks": []}\n# second line' in content
        assert "# class GameState: grid" in content
        assert "def m1(state):\n    return state" in content

    def test_result_is_integrated_code(self):
        artifact = integrate(_modular_artifacts(), _modular_graph(), artifact_id="r:integrate:1")
        assert artifact.content_kind == ContentKind.INTEGRATED_CODE
        assert artifact.role == AgentRole.ORCHESTRATOR
        assert artifact.artifact_id == "r:integrate:1"

    def test_missing_artifact(self):
        artifacts = [a for a in _modular_artifacts() if a.task_id != "m1"]
        with pytest.raises(MissingArtifactError) as excinfo:
            integrate(artifacts, _modular_graph())
        assert excinfo.value.task_id == "m1"

    def test_is_deterministic(self):
        first = integrate(_modular_artifacts(), _modular_graph(), created_at_ms=1.0)
        second = integrate(list(reversed(_modular_artifacts())), _modular_graph(), created_at_ms=1.0)
        assert first == second


class TestFeedback:
    def _report(self, *results):
        return ValidationReport(artifact_id="run:m1:1", task_id="m1", results=tuple(results))

    def test_lists_every_failed_check(self):
        task = make_task("m1", TaskKind.IMPLEMENT, "loop", attempts=1)
        summary = build_feedback(task, self._report(CheckResult("defines", False, "missing def"),
                                                    CheckResult("tests", False, "missing test"),
                                                    CheckResult("ok", True, "")))
        assert summary.failed_checks == (("defines", "missing def"), ("tests", "missing test"))
        rendered = summary.render()
        assert "Attempt 1 of task 'm1'" in rendered
        assert "- defines: missing def" in rendered
        assert "- tests: missing test" in rendered

    def test_all_passed(self):
        task = make_task("m1", TaskKind.IMPLEMENT, "loop", attempts=1)
        with pytest.raises(NoFailuresError):
            build_feedback(task, self._report(CheckResult("ok", True, "")))

    def test_summary_needs_failures(self):
        with pytest.raises(ValueError):
            FailureSummary("m1", 1, ())


def test_write_outputs(tmp_path):
    final = integrate(_modular_artifacts(), _modular_graph())
    run = PipelineRun(run_id="r1", spec=TaskSpec(spec_id="s", title="S", description="d"), graph=_modular_graph(),
                      artifacts=tuple(_modular_artifacts()) + (final,), finished_at_ms=2.0,
                      status=RunStatus.SUCCEEDED)
    paths = write_outputs(run, str(tmp_path))

    names = sorted(os.path.basename(p) for p in paths)
    assert names == ["d1.txt", "integrate.txt", "integrated.txt", "m1.txt", "plan.txt"]
    with open(tmp_path / "r1" / "integrated.txt", encoding="utf-8") as f:
        assert f.read() == final.content
