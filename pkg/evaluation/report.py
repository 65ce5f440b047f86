"""
Benchmark report rendering.

The text report is a set of fixed-width tables (one row per task and
pipeline, then modular vs monolithic comparisons and optional survey means);
the JSON document carries the same data.
"""
import logging
import os
from dataclasses import dataclass
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import pandas as pd

from core.model import PipelineMode
from evaluation.metrics import BenchRow
from tools.file_wrapper import write_document

logger = logging.getLogger(__name__)

NOT_AVAILABLE = "n/a"
MISSING = "-"
TIME_DECIMALS = 2


@dataclass(frozen=True)
class BenchReport:
    text: str
    data: Dict[str, Any]


def _fmt_time(value: Optional[float]) -> str:
    return MISSING if value is None else f"{value:.{TIME_DECIMALS}f}"


def _fmt_pct(value: Optional[float]) -> str:
    return NOT_AVAILABLE if value is None else f"{value:.1f}"


def render_table(headers: Sequence[str], rows: Sequence[Sequence[str]], right_align: Sequence[int] = ()) -> List[str]:
    """Fixed-width table with ' | ' column separators; trailing spaces are stripped."""
    widths = [max([len(h)] + [len(r[i]) for r in rows]) for i, h in enumerate(headers)]

    def line(cells):
        padded = [c.rjust(w) if i in right_align else c.ljust(w) for i, (c, w) in enumerate(zip(cells, widths))]
        return " | ".join(padded).rstrip()

    return [line(headers), "-+-".join("-" * w for w in widths)] + [line(r) for r in rows]


def _optional(value) -> Optional[float]:
    return None if pd.isna(value) else float(value)


def _frame(rows: Sequence[BenchRow]) -> pd.DataFrame:
    df = pd.DataFrame([{"task_name": r.task_name, "pipeline": PipelineMode(r.pipeline).value,
                        "dev_time_min": r.dev_time_min, "accuracy_pct": r.accuracy_pct} for r in rows])
    df["accuracy_pct"] = df["accuracy_pct"].astype("float64")
    return df


def _speedup(modular_min: Optional[float], monolithic_min: Optional[float]) -> Optional[float]:
    """Monolithic over modular minutes, both as printed; None when modular prints as 0.00."""
    if modular_min is None or monolithic_min is None:
        return None
    modular, monolithic = round(modular_min, TIME_DECIMALS), round(monolithic_min, TIME_DECIMALS)
    return monolithic / modular if modular > 0 else None


def _comparison(rows: Sequence[BenchRow]) -> Tuple[List[Dict[str, Any]], List[Dict[str, Any]]]:
    """Per-task modular vs monolithic development time and accuracy (means over repeated rows)."""
    modes = [m.value for m in PipelineMode]
    means = _frame(rows).groupby(["task_name", "pipeline"])[["dev_time_min", "accuracy_pct"]].mean()
    dev = means["dev_time_min"].unstack("pipeline").reindex(columns=modes)
    acc = means["accuracy_pct"].unstack("pipeline").reindex(columns=modes)

    dev_time, accuracy = [], []
    for task_name in dev.index:
        modular_min = _optional(dev.at[task_name, PipelineMode.MODULAR.value])
        monolithic_min = _optional(dev.at[task_name, PipelineMode.MONOLITHIC.value])
        dev_time.append({"task_name": task_name, "modular_min": modular_min, "monolithic_min": monolithic_min,
                         "speedup": _speedup(modular_min, monolithic_min)})
        accuracy.append({"task_name": task_name,
                         "modular_pct": _optional(acc.at[task_name, PipelineMode.MODULAR.value]),
                         "monolithic_pct": _optional(acc.at[task_name, PipelineMode.MONOLITHIC.value])})
    return dev_time, accuracy


def _fmt_speedup(entry: Dict[str, Any]) -> str:
    if entry["modular_min"] is None or entry["monolithic_min"] is None:
        return MISSING
    if entry["speedup"] is None:
        return NOT_AVAILABLE
    return f"{entry['speedup']:.2f}x"


def bench_report(rows: Sequence[BenchRow], survey: Optional[Mapping[Tuple[str, str], float]] = None,
                 survey_pipelines: Optional[Mapping[Tuple[str, str], float]] = None) -> BenchReport:
    """
    Renders the benchmark report.

    Args:
        rows: One BenchRow per run. Sorted by task, then pipeline.
        survey: Optional means keyed by (task_name, criterion).
        survey_pipelines: Optional means keyed by (pipeline, criterion).
    """
    if not rows:
        raise ValueError("bench_report needs at least one row.")
    ordered = sorted(rows, key=lambda r: (r.task_name, PipelineMode(r.pipeline).value, r.run_id))

    sections = [["Benchmark report"] + render_table(
        ["Task", "Pipeline", "DevTime(min)", "Accuracy(%)", "Status"],
        [[r.task_name, PipelineMode(r.pipeline).value, _fmt_time(r.dev_time_min), _fmt_pct(r.accuracy_pct), r.status]
         for r in ordered],
        right_align=(2, 3),
    )]

    dev_time, accuracy = _comparison(ordered)
    sections.append(["Development time comparison"] + render_table(
        ["Task", "Modular(min)", "Monolithic(min)", "Speedup"],
        [[e["task_name"], _fmt_time(e["modular_min"]), _fmt_time(e["monolithic_min"]), _fmt_speedup(e)]
         for e in dev_time],
        right_align=(1, 2, 3),
    ))
    sections.append(["Accuracy comparison"] + render_table(
        ["Task", "Modular(%)", "Monolithic(%)"],
        [[e["task_name"], _fmt_pct(e["modular_pct"]), _fmt_pct(e["monolithic_pct"])] for e in accuracy],
        right_align=(1, 2),
    ))

    survey_rows = None
    if survey:
        survey_rows = [{"task_name": t, "criterion": c, "mean": m} for (t, c), m in sorted(survey.items())]
        sections.append(["Survey means"] + render_table(
            ["Task", "Criterion", "Mean"],
            [[e["task_name"], e["criterion"], f"{e['mean']:.2f}"] for e in survey_rows],
            right_align=(2,),
        ))
    pipeline_rows = None
    if survey_pipelines:
        pipeline_rows = [{"pipeline": p, "criterion": c, "mean": m} for (p, c), m in sorted(survey_pipelines.items())]
        sections.append(["Survey means by pipeline"] + render_table(
            ["Pipeline", "Criterion", "Mean"],
            [[e["pipeline"], e["criterion"], f"{e['mean']:.2f}"] for e in pipeline_rows],
            right_align=(2,),
        ))

    text = "\n\n".join("\n".join(section) for section in sections) + "\n"
    data = {
        "rows": [{"task_name": r.task_name, "pipeline": PipelineMode(r.pipeline).value,
                  "dev_time_min": r.dev_time_min, "accuracy_pct": r.accuracy_pct,
                  "run_id": r.run_id, "status": r.status} for r in ordered],
        "comparison": {"dev_time": dev_time, "accuracy": accuracy},
        "survey": survey_rows,
        "survey_by_pipeline": pipeline_rows,
    }
    return BenchReport(text=text, data=data)


def write_report(report: BenchReport, out_dir: str) -> Tuple[str, str]:
    """Writes report.txt and report.json into `out_dir`."""
    text_path = write_document(report.text, os.path.join(out_dir, "report.txt"))
    json_path = write_document(report.data, os.path.join(out_dir, "report.json"))
    logger.info(f"Report written to {text_path} and {json_path}")
    return text_path, json_path
