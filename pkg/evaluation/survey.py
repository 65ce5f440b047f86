"""
Survey ingestion.

The survey file is a CSV with header respondent_id,task_name,criterion,score and
an optional pipeline column (modular|monolithic, modular when absent).
"""
import logging
from dataclasses import dataclass
from typing import Dict, Iterable, List, Tuple

import pandas as pd

from core.exceptions import OutOfRangeScoreError
from core.model import PipelineMode

logger = logging.getLogger(__name__)

CRITERIA = ("readability", "usability", "satisfaction")
REQUIRED_COLUMNS = ("respondent_id", "task_name", "criterion", "score")
MIN_SCORE, MAX_SCORE = 1, 5


@dataclass(frozen=True)
class SurveyRecord:
    respondent_id: str
    task_name: str
    criterion: str
    score: int
    pipeline: PipelineMode = PipelineMode.MODULAR

    def __post_init__(self):
        if self.criterion not in CRITERIA:
            raise ValueError(f"Unknown survey criterion '{self.criterion}'. Use one of {CRITERIA}.")


def load_survey(path: str) -> List[SurveyRecord]:
    """
    Reads survey rows from a CSV file. Scores are range-checked later by
    `ingest_survey`, so an out-of-range score is reported against its row.

    Raises:
        OSError, ValueError: unreadable file, missing columns, non-integer scores.
    """
    df = pd.read_csv(path, dtype=str, keep_default_na=False)
    missing = [c for c in REQUIRED_COLUMNS if c not in df.columns]
    if missing:
        raise ValueError(f"Survey file {path} is missing columns {missing}.")
    records = []
    for row in df.itertuples(index=False):
        row = row._asdict()
        pipeline = (row.get("pipeline") or PipelineMode.MODULAR.value).strip()
        records.append(SurveyRecord(
            respondent_id=row["respondent_id"].strip(),
            task_name=row["task_name"].strip(),
            criterion=row["criterion"].strip(),
            score=int(row["score"]),
            pipeline=PipelineMode(pipeline),
        ))
    logger.info(f"Loaded {len(records)} survey rows from {path}")
    return records


def _frame(rows: Iterable[SurveyRecord]) -> pd.DataFrame:
    rows = list(rows)
    for row in rows:
        if not MIN_SCORE <= row.score <= MAX_SCORE:
            raise OutOfRangeScoreError(row)
    return pd.DataFrame(
        [{"task_name": r.task_name, "criterion": r.criterion, "score": r.score,
          "pipeline": PipelineMode(r.pipeline).value} for r in rows],
        columns=["task_name", "criterion", "score", "pipeline"],
    )


def ingest_survey(rows: Iterable[SurveyRecord]) -> Dict[Tuple[str, str], float]:
    """
    Mean score per (task_name, criterion), rounded to 2 decimals.

    Raises:
        OutOfRangeScoreError: a score outside 1..5.
    """
    df = _frame(rows)
    if df.empty:
        return {}
    means = df.groupby(["task_name", "criterion"])["score"].mean()
    return {(task, criterion): round(float(mean), 2) for (task, criterion), mean in means.items()}


def survey_by_pipeline(rows: Iterable[SurveyRecord]) -> Dict[Tuple[str, str], float]:
    """Mean score per (pipeline, criterion), rounded to 2 decimals."""
    df = _frame(rows)
    if df.empty:
        return {}
    means = df.groupby(["pipeline", "criterion"])["score"].mean()
    return {(pipeline, criterion): round(float(mean), 2) for (pipeline, criterion), mean in means.items()}
