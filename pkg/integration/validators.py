"""
Acceptance checks for agent artifacts.

Three check methods are supported:
- contains_text: substring test on the artifact content.
- external_command: the configured command runs with the artifact on standard
  input and the task_id as its last argument; exit status 0 passes.
- scripted: the argument names a callable in a caller-provided script table
  (used by tests to script pass/fail sequences).
"""
import logging
from typing import Callable, Iterable, List, Mapping, Optional, Tuple

from core.model import Artifact, CheckMethod, CheckResult, CheckSpec, ValidationReport
from core.process_utils import run_command_with_input, split_command

logger = logging.getLogger(__name__)

DEFAULT_CHECK_TIMEOUT_S = 30.0

# A scripted check receives the artifact and returns (passed, detail).
ScriptFn = Callable[[Artifact], Tuple[bool, str]]


def applicable_checks(artifact: Artifact, checks: Iterable[CheckSpec]) -> List[CheckSpec]:
    return [c for c in checks if c.applies(artifact.content_kind)]


def _run_contains_text(artifact: Artifact, check: CheckSpec) -> CheckResult:
    if check.argument in artifact.content:
        return CheckResult(check.name, True, f"found '{check.argument}'")
    return CheckResult(check.name, False, f"text '{check.argument}' not found")


def _run_external_command(artifact: Artifact, check: CheckSpec, timeout_s: float) -> CheckResult:
    try:
        command = split_command(check.argument, [artifact.task_id])
    except ValueError as e:
        return CheckResult(check.name, False, f"invalid command line: {e}")
    if not command:
        return CheckResult(check.name, False, "empty command")
    try:
        result = run_command_with_input(command, artifact.content, timeout_s)
    except OSError as e:
        logger.warning(f"Check '{check.name}' could not spawn {command[0]}: {e}")
        return CheckResult(check.name, False, f"spawn failed: {e}")
    if result.timed_out:
        return CheckResult(check.name, False, f"timed out after {timeout_s:g}s")
    tail = result.output.strip()[-500:]
    if result.returncode == 0:
        return CheckResult(check.name, True, "exit status 0")
    return CheckResult(check.name, False, f"exit status {result.returncode}" + (f": {tail}" if tail else ""))


def _run_scripted(artifact: Artifact, check: CheckSpec, scripts: Optional[Mapping[str, ScriptFn]]) -> CheckResult:
    script = (scripts or {}).get(check.argument)
    if script is None:
        return CheckResult(check.name, False, f"no script registered under '{check.argument}'")
    try:
        passed, detail = script(artifact)
    except Exception as e:
        return CheckResult(check.name, False, f"script raised {type(e).__name__}: {e}")
    return CheckResult(check.name, bool(passed), detail or "")


def validate_artifact(artifact: Artifact, checks: Iterable[CheckSpec],
                      scripts: Optional[Mapping[str, ScriptFn]] = None,
                      timeout_s: float = DEFAULT_CHECK_TIMEOUT_S) -> ValidationReport:
    """
    Runs every check applicable to the artifact's content kind and returns
    the report. A check that cannot run is recorded as failed; the report is
    always complete.
    """
    results: List[CheckResult] = []
    for check in applicable_checks(artifact, checks):
        if check.method == CheckMethod.CONTAINS_TEXT:
            result = _run_contains_text(artifact, check)
        elif check.method == CheckMethod.EXTERNAL_COMMAND:
            result = _run_external_command(artifact, check, timeout_s)
        else:
            result = _run_scripted(artifact, check, scripts)
        results.append(result)

    report = ValidationReport(artifact_id=artifact.artifact_id, task_id=artifact.task_id, results=tuple(results))
    failed = [r.check_name for r in report.failures]
    if failed:
        logger.info(f"Artifact {artifact.artifact_id}: {len(failed)}/{len(results)} checks failed {failed}")
    return report
