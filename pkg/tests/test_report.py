import json
import os
import random
import re

import pytest

from core.model import PipelineMode
from evaluation.charts import render_accuracy_chart, render_comparison_chart, render_survey_chart
from evaluation.metrics import BenchRow
from evaluation.report import bench_report, render_table, write_report

MOD, MONO = PipelineMode.MODULAR, PipelineMode.MONOLITHIC

BENCH_ROWS = [
    BenchRow("Snake", MONO, 2.1, 90.0, "snake-mono"),
    BenchRow("Pacman", MOD, 1.8, 100.0, "pacman-mod"),
    BenchRow("Chess", MOD, 3.2, 100.0, "chess-mod"),
    BenchRow("RTS", MONO, 5.6, None, "rts-mono", status="failed"),
    BenchRow("FPS", MOD, 4.1, 92.0, "fps-mod"),
    BenchRow("Chess", MONO, 4.8, 85.0, "chess-mono"),
    BenchRow("Pacman", MONO, 2.7, 80.0, "pacman-mono"),
    BenchRow("RTS", MOD, 3.9, 95.0, "rts-mod"),
    BenchRow("Snake", MOD, 1.5, 100.0, "snake-mod"),
    BenchRow("FPS", MONO, 6.2, 82.0, "fps-mono"),
]


def _normalized_lines(text):
    return [re.sub(r"\s+", " ", line).strip() for line in text.splitlines()]


def test_matches_golden(golden_dir):
    with open(os.path.join(golden_dir, "bench_report.txt"), encoding="utf-8") as f:
        assert bench_report(BENCH_ROWS).text == f.read()


def test_row_text():
    report = bench_report([BenchRow("Pacman", MOD, 1.8, 100.0, "r1")])
    assert "Pacman | modular | 1.80 | 100.0 | succeeded" in _normalized_lines(report.text)


def test_pipelines_are_adjacent():
    lines = _normalized_lines(bench_report(BENCH_ROWS).text)
    modular = lines.index("Pacman | modular | 1.80 | 100.0 | succeeded")
    assert lines[modular + 1] == "Pacman | monolithic | 2.70 | 80.0 | succeeded"


def test_json_document():
    data = bench_report(BENCH_ROWS).data
    assert len(data["rows"]) == 10
    assert data["rows"][0] == {"task_name": "Chess", "pipeline": "modular", "dev_time_min": 3.2,
                               "accuracy_pct": 100.0, "run_id": "chess-mod", "status": "succeeded"}
    speedups = {e["task_name"]: round(e["speedup"], 2) for e in data["comparison"]["dev_time"]}
    assert speedups == {"Chess": 1.5, "FPS": 1.51, "Pacman": 1.5, "RTS": 1.44, "Snake": 1.4}
    rts = [e for e in data["comparison"]["accuracy"] if e["task_name"] == "RTS"][0]
    assert rts["monolithic_pct"] is None
    assert data["survey"] is None


def test_missing_pipeline_and_zero_time():
    text = bench_report([BenchRow("Solo", MOD, 1.0, 50.0, "a"), BenchRow("Zero", MOD, 0.0, None, "b"),
                         BenchRow("Zero", MONO, 1.0, None, "c")]).text
    lines = _normalized_lines(text)
    assert "Solo | 1.00 

def test_speedup_uses_printed_minutes():
    text = bench_report([BenchRow("Tiny", MOD, 0.004, None, "a"), BenchRow("Tiny", MONO, 0.012, None, "b"),
                         BenchRow("Small", MOD, 0.0149, None, "c"), BenchRow("Small", MONO, 0.03, None, "d")]).text
    lines = _normalized_lines(text)
    assert "Tiny | 0.00 | 0.01 | n/a" in lines
    assert "Small | 0.01 | 0.03 | 3.00x" in lines


def test_speedup_ignores_sub_display_jitter():
    rng = random.Random(7)
    texts = set()
    for _ in range(20):
        rows = [BenchRow("Jitter", MOD, rng.uniform(0.0, 0.0049), 100.0, "a"),
                BenchRow("Jitter", MONO, rng.uniform(0.0, 0.0049), 100.0, "b")]
        texts.add(bench_report(rows).text)
    assert len(texts) == 1
    assert "Jitter | 0.00 | 0.00 | n/a" in _normalized_lines(texts.pop())


def test_repeated_rows_are_averaged():
    data = bench_report([BenchRow("Rep", MOD, 1.0, 100.0, "a"), BenchRow("Rep", MOD, 3.0, 50.0, "b"),
                         BenchRow("Rep", MONO, 4.0, None, "c")]).data
    assert data["comparison"]["dev_time"] == [{"task_name": "Rep", "modular_min": 2.0, "monolithic_min": 4.0,
                                               "speedup": 2.0}]
    assert data["comparison"]["accuracy"] == [{"task_name": "Rep", "modular_pct": 75.0, "monolithic_pct": None}]
| - | -" in lines
    assert "Zero | 0.00 | 1.00 | n/a" in lines


def test_survey_sections():
    report = bench_report(BENCH_ROWS[:2], survey={("Pacman", "readability"): 4.67},
                          survey_pipelines={("modular", "readability"): 4.5})
    lines = _normalized_lines(report.text)
    assert "Survey means" in lines
    assert "Pacman | readability | 4.67" in lines
    assert "Survey means by pipeline" in lines
    assert "modular | readability | 4.50" in lines
    assert report.data["survey"] == [{"task_name": "Pacman", "criterion": "readability", "mean": 4.67}]


def test_empty_rows():
    with pytest.raises(ValueError):
        bench_report([])


def test_render_table_alignment():
    lines = render_table(["A", "Num"], [["x", "1"], ["yy", "10"]], right_align=(1,))
    assert lines == ["A  | Num", "---+----", "x  |   1", "yy |  10"]


def test_write_report(tmp_path):
    report = bench_report(BENCH_ROWS)
    text_path, json_path = write_report(report, str(tmp_path))
    with open(text_path, encoding="utf-8") as f:
        assert f.read() == report.text
    with open(json_path, encoding="utf-8") as f:
        assert json.load(f)["rows"] == report.data["rows"]


def test_comparison_chart(tmp_path):
    path = render_comparison_chart(BENCH_ROWS, str(tmp_path / "charts" / "dev_time.png"))
    assert os.path.getsize(path) > 0


def test_accuracy_chart(tmp_path):
    path = render_accuracy_chart(BENCH_ROWS, str(tmp_path / "accuracy.png"))
    assert os.path.getsize(path) > 0


def test_survey_chart(tmp_path):
    means = {("modular", "readability"): 4.5, ("monolithic", "readability"): 3.0, ("modular", "structure"): 4.0}
    path = render_survey_chart(means, str(tmp_path / "nested" / "survey.png"))
    assert os.path.getsize(path) > 0


@pytest.mark.parametrize("render", [render_comparison_chart, render_accuracy_chart, render_survey_chart])
def test_charts_reject_empty_input(render, tmp_path):
    with pytest.raises(ValueError):
        render([] if render is not render_survey_chart else {}, str(tmp_path / "empty.png"))
