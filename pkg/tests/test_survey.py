import pytest

from core.exceptions import OutOfRangeScoreError
from core.model import PipelineMode
from evaluation.survey import SurveyRecord, ingest_survey, load_survey, survey_by_pipeline


def _record(score, task="Pacman", criterion="readability", pipeline=PipelineMode.MODULAR, respondent="r1"):
    return SurveyRecord(respondent, task, criterion, score, pipeline)


def test_mean_is_rounded():
    assert ingest_survey([_record(5), _record(4), _record(5)]) == {("Pacman", "readability"): 4.67}


def test_groups_by_task_and_criterion():
    means = ingest_survey([_record(5), _record(3, criterion="usability"), _record(2, task="Snake")])
    assert means == {("Pacman", "readability"): 5.0, ("Pacman", "usability"): 3.0, ("Snake", "readability"): 2.0}


def test_empty():
    assert ingest_survey([]) == {}


@pytest.mark.parametrize("score", [0, 6])
def test_out_of_range(score):
    with pytest.raises(OutOfRangeScoreError):
        ingest_survey([_record(4), _record(score)])


def test_unknown_criterion():
    with pytest.raises(ValueError):
        _record(3, criterion="vibes")


def test_by_pipeline():
    rows = [_record(5), _record(4), _record(2, pipeline=PipelineMode.MONOLITHIC)]
    assert survey_by_pipeline(rows) == {("modular", "readability"): 4.5, ("monolithic", "readability"): 2.0}


def test_load_csv_defaults_to_modular(tmp_path):
    path = tmp_path / "survey.csv"
    path.write_text("respondent_id,task_name,criterion,score\n"
                    "r1,Pacman,readability,5\n"
                    "r2,Pacman,readability,4\n", encoding="utf-8")
    rows = load_survey(str(path))
    assert [(r.respondent_id, r.score, r.pipeline) for r in rows] == [
        ("r1", 5, PipelineMode.MODULAR), ("r2", 4, PipelineMode.MODULAR)]


def test_load_csv_with_pipeline(tmp_path):
    path = tmp_path / "survey.csv"
    path.write_text("respondent_id,task_name,criterion,score,pipeline\n"
                    "r1,Chess,usability,3,monolithic\n", encoding="utf-8")
    assert load_survey(str(path))[0].pipeline == PipelineMode.MONOLITHIC


def test_load_csv_missing_column(tmp_path):
    path = tmp_path / "survey.csv"
    path.write_text("respondent_id,task_name,score\nr1,Pacman,5\n", encoding="utf-8")
    with pytest.raises(ValueError):
        load_survey(str(path))
