import logging
import os
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")  # Non-interactive backend, charts are only ever written to files.
import matplotlib.pyplot as plt
import numpy as np

from core.model import PipelineMode
from evaluation.metrics import BenchRow

logger = logging.getLogger(__name__)

MODES = [m.value for m in PipelineMode]


def _mean_by_task(rows: Sequence[BenchRow], value_of) -> Tuple[List[str], Dict[str, List[float]]]:
    """Per-task mean of `value_of(row)` for each pipeline; missing values plot as 0."""
    tasks = sorted({r.task_name for r in rows})
    series: Dict[str, List[float]] = {}
    for mode in MODES:
        values = []
        for task in tasks:
            picked = [value_of(r) for r in rows
                      if r.task_name == task and PipelineMode(r.pipeline).value == mode and value_of(r) is not None]
            values.append(sum(picked) / len(picked) if picked else 0.0)
        series[mode] = values
    return tasks, series


def _grouped_bar_chart(categories: Sequence[str], series: Mapping[str, Sequence[float]], title: str,
                       xlabel: str, ylabel: str, output_file_path: str,
                       ylim: Optional[Tuple[float, float]] = None) -> str:
    x = np.arange(len(categories))
    width = 0.8 / max(1, len(series))

    fig, ax = plt.subplots(figsize=(max(6, 1.6 * len(categories)), 4.5))
    for i, (label, values) in enumerate(series.items()):
        offset = (i - (len(series) - 1) / 2) * width
        ax.bar(x + offset, values, width, label=label)

    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_xticks(x)
    ax.set_xticklabels(categories)
    if ylim:
        ax.set_ylim(*ylim)
    ax.grid(True, axis="y")
    ax.legend()
    fig.tight_layout()

    os.makedirs(os.path.dirname(os.path.abspath(output_file_path)), exist_ok=True)
    fig.savefig(output_file_path)
    plt.close(fig)
    logger.info(f"Chart '{title}' saved to {output_file_path}")
    return output_file_path


def render_comparison_chart(rows: Sequence[BenchRow], output_file_path: str) -> str:
    """
    Grouped bar chart of development time per task, modular next to
    monolithic. Missing pipelines are drawn as zero-height bars.
    Returns the path of the written PNG.
    """
    if not rows:
        raise ValueError("render_comparison_chart needs at least one row.")
    tasks, series = _mean_by_task(rows, lambda r: r.dev_time_min)
    return _grouped_bar_chart(tasks, series, "Development time comparison", "Task",
                              "Development time (min)", output_file_path)


def render_accuracy_chart(rows: Sequence[BenchRow], output_file_path: str) -> str:
    """Accuracy per task, modular next to monolithic. Runs without checks are left out of the means."""
    if not rows:
        raise ValueError("render_accuracy_chart needs at least one row.")
    tasks, series = _mean_by_task(rows, lambda r: r.accuracy_pct)
    return _grouped_bar_chart(tasks, series, "Accuracy comparison", "Task", "Accuracy (%)",
                              output_file_path, ylim=(0, 100))


def render_survey_chart(survey_pipelines: Mapping[Tuple[str, str], float], output_file_path: str) -> str:
    """Mean survey score per criterion (1..5), one bar per pipeline."""
    if not survey_pipelines:
        raise ValueError("render_survey_chart needs at least one (pipeline, criterion) mean.")
    criteria = sorted({criterion for _, criterion in survey_pipelines})
    pipelines = [m for m in MODES if any(p == m for p, _ in survey_pipelines)]
    series = {p: [survey_pipelines.get((p, c), 0.0) for c in criteria] for p in pipelines}
    return _grouped_bar_chart(criteria, series, "Survey comparison", "Criterion", "Mean score",
                              output_file_path, ylim=(0, 5))
