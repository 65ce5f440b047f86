"""
Combines component artifacts into the final program and turns failed
validation reports into feedback for the retry prompt.
"""
import logging
import os
from dataclasses import dataclass
from typing import Iterable, List, Mapping, Optional, Tuple

from core.exceptions import MissingArtifactError, NoFailuresError
from core.model import (
    INTEGRATE_TASK_ID,
    AgentRole,
    Artifact,
    ContentKind,
    PipelineRun,
    Task,
    TaskGraph,
    TaskKind,
    ValidationReport,
    monotonic_ms,
    topological_order,
)
from tools.file_wrapper import write_document

logger = logging.getLogger(__name__)

# Content kinds rendered as comment-prefixed header sections.
COMMENTED_KINDS = (ContentKind.PLAN, ContentKind.SCHEMA, ContentKind.REVIEW)


@dataclass(frozen=True)
class FailureSummary:
    task_id: str
    attempt: int
    failed_checks: Tuple[Tuple[str, str], ...]

    def __post_init__(self):
        if not self.failed_checks:
            raise ValueError("A FailureSummary needs at least one failed check.")

    def render(self) -> str:
        lines = [f"Attempt {self.attempt} of task '{self.task_id}' failed these checks:"]
        lines += [f"- {name}: {detail}" for name, detail in self.failed_checks]
        return "\n".join(lines)


def section_header(task_id: str, role: AgentRole) -> str:
    return f"=== {task_id} ({AgentRole(role).value}) ==="


def _comment(text: str) -> str:
    return "\n".join(f"# {line}" if line else "#" for line in text.splitlines())


def integrate(artifacts: Iterable[Artifact], graph: TaskGraph, artifact_id: str = INTEGRATE_TASK_ID,
              created_at_ms: Optional[float] = None) -> Artifact:
    """
    Concatenates one artifact per non-integrate task into a single
    integrated_code artifact.

    Sections follow the topological order of their source tasks (ties by
    graph insertion order). Each starts with '=== <task_id> (<role>) ==='.
    Plan, schema and review content is '# '-prefixed; code is kept verbatim.

    Raises:
        MissingArtifactError: a non-integrate task has no artifact.
    """
    by_task = {}
    for artifact in artifacts:
        by_task[artifact.task_id] = artifact

    sections: List[str] = []
    for task_id in topological_order(graph):
        task = graph[task_id]
        if task.kind == TaskKind.INTEGRATE:
            continue
        artifact = by_task.get(task_id)
        if artifact is None:
            raise MissingArtifactError(task_id)
        body = artifact.content.rstrip("\n")
        if artifact.content_kind in COMMENTED_KINDS:
            body = _comment(body)
        sections.append(f"{section_header(task_id, task.role)}\n{body}\n")

    content = "\n".join(sections)
    logger.info(f"Integrated {len(sections)} sections into {len(content)} chars")
    return Artifact(artifact_id=artifact_id, task_id=INTEGRATE_TASK_ID, role=AgentRole.ORCHESTRATOR,
                    content=content, content_kind=ContentKind.INTEGRATED_CODE,
                    created_at_ms=monotonic_ms() if created_at_ms is None else created_at_ms)


def build_feedback(task: Task, report: ValidationReport) -> FailureSummary:
    """
    Summarizes the failed checks of `report` for the retry prompt.

    Raises:
        NoFailuresError: every check in the report passed.
    """
    failures = report.failures
    if not failures:
        raise NoFailuresError(report.artifact_id)
    return FailureSummary(task_id=task.task_id, attempt=task.attempts,
                          failed_checks=tuple((r.check_name, r.detail) for r in failures))


def write_outputs(run: PipelineRun, out_dir: str) -> List[str]:
    """
    Writes out/<run_id>/<task_id>.txt for every artifact and
    out/<run_id>/integrated.txt for the final one. Returns the paths written.
    """
    run_dir = os.path.join(out_dir, run.run_id)
    paths = []
    for artifact in run.artifacts:
        paths.append(write_document(artifact.content, os.path.join(run_dir, f"{artifact.task_id}.txt")))
    final = run.final_artifact()
    if final is not None:
        paths.append(write_document(final.content, os.path.join(run_dir, "integrated.txt")))
    logger.info(f"Wrote {len(paths)} artifact files to {run_dir}")
    return paths


def artifacts_for(graph: TaskGraph, artifacts: Mapping[str, Artifact]) -> List[Artifact]:
    """Artifacts of the non-integrate tasks, in graph insertion order (skipping absent ones)."""
    return [artifacts[tid] for tid, task in graph.nodes.items()
            if task.kind != TaskKind.INTEGRATE and tid in artifacts]
