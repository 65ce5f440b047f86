"""Run-level metrics: development time and accuracy, and the BenchRow built from them."""
import logging
from dataclasses import dataclass
from typing import Optional

from core.exceptions import UnfinishedRunError
from core.model import PipelineMode, PipelineRun

logger = logging.getLogger(__name__)

MS_PER_MINUTE = 60000.0


@dataclass(frozen=True)
class BenchRow:
    task_name: str
    pipeline: PipelineMode
    dev_time_min: float
    accuracy_pct: Optional[float]
    run_id: str
    status: str = "succeeded"

    def __post_init__(self):
        if self.dev_time_min < 0:
            raise ValueError(f"dev_time_min must be non-negative, got {self.dev_time_min}.")
        if self.accuracy_pct is not None and not 0 <= self.accuracy_pct <= 100:
            raise ValueError(f"accuracy_pct must be within 0..100, got {self.accuracy_pct}.")


def development_time(run: PipelineRun) -> float:
    """Monotonic elapsed time of a finished run, in minutes."""
    if not run.is_finished:
        raise UnfinishedRunError(run.run_id)
    return max(0.0, run.finished_at_ms - run.started_at_ms) / MS_PER_MINUTE


def accuracy(run: PipelineRun) -> Optional[float]:
    """
    Percentage of passed checks across every report of the run, or None when
    the run recorded no applicable checks at all.
    """
    total = sum(len(report.results) for report in run.reports)
    if total == 0:
        return None
    passed = sum(1 for report in run.reports for result in report.results if result.passed)
    return 100.0 * passed / total


def bench_row(run: PipelineRun, task_name: Optional[str] = None) -> BenchRow:
    """Builds the report row of a finished run; the task name defaults to the spec title."""
    return BenchRow(
        task_name=task_name or run.spec.title or run.spec.spec_id,
        pipeline=run.spec.mode,
        dev_time_min=development_time(run),
        accuracy_pct=accuracy(run),
        run_id=run.run_id,
        status=run.status.value,
    )
