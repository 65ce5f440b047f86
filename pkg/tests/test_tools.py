import io
import json
import logging
from logging.handlers import RotatingFileHandler

import numpy as np
import pytest

from core.logging_config import RunEventLogger, setup_logging
from tools.file_wrapper import (
    convert_to_json_serializable,
    extract_json_blocks,
    remove_json_marker,
    retry_with_exponential_backoff,
    write_document,
)


class TestJsonHelpers:
    def test_blocks_in_prose(self):
        text = 'first {"a": 1} then [1, 2] and a broken {"b": } end'
        assert extract_json_blocks(text) == ['{"a": 1}', "[1, 2]"]

    def test_braces_inside_strings(self):
        assert extract_json_blocks('x {"s": "}{"} y') == ['{"s": "}{"}']

    def test_fence(self):
        assert remove_json_marker('```json\n{"a": 1}\n```') == '{"a": 1}'

    def test_serializable(self):
        data = {"n": np.int64(3), "f": np.float64(0.5), "nan": float("nan"), "arr": np.array([1, 2])}
        assert convert_to_json_serializable(data) == {"n": 3, "f": 0.5, "nan": None, "arr": [1, 2]}

    def test_write_document(self, tmp_path):
        text_path = write_document("plain", str(tmp_path / "a" / "x.txt"))
        json_path = write_document({"k": [1]}, str(tmp_path / "a" / "x.json"))
        assert open(text_path, encoding="utf-8").read() == "plain"
        assert json.load(open(json_path, encoding="utf-8")) == {"k": [1]}


class TestRetry:
    def test_retries_then_succeeds(self):
        calls = []

        @retry_with_exponential_backoff(initial_delay=0.0, jitter=False, max_retries=1, errors=(ConnectionError,))
        def flaky():
            calls.append(1)
            if len(calls) == 1:
                raise ConnectionError("down")
            return "ok"

        assert flaky() == "ok"
        assert len(calls) == 2

    def test_reraises_after_last_retry(self):
        calls = []

        @retry_with_exponential_backoff(initial_delay=0.0, jitter=False, max_retries=1, errors=(ConnectionError,))
        def down():
            calls.append(1)
            raise ConnectionError("down")

        with pytest.raises(ConnectionError):
            down()
        assert len(calls) == 2

    def test_other_errors_are_not_retried(self):
        calls = []

        @retry_with_exponential_backoff(initial_delay=0.0, max_retries=3, errors=(ConnectionError,))
        def broken():
            calls.append(1)
            raise KeyError("x")

        with pytest.raises(KeyError):
            broken()
        assert len(calls) == 1


class TestRunEventLogger:
    def test_stream_and_file(self, tmp_path):
        stream = io.StringIO()
        path = tmp_path / "events.jsonl"
        events = RunEventLogger(stream=stream, path=str(path))
        events.emit("dispatched", "m1", "mot1", "attempt 1/3")
        events.close()

        record = json.loads(stream.getvalue())
        assert record["event"] == "dispatched" and record["agent_id"] == "mot1"
        assert json.loads(path.read_text(encoding="utf-8")) == record
        assert events.events == [record]

    def test_unknown_event(self):
        with pytest.raises(ValueError):
            RunEventLogger().emit("exploded", "m1")


def test_setup_logging_is_idempotent(tmp_path):
    setup_logging("idempotent.log", str(tmp_path))
    setup_logging("idempotent.log", str(tmp_path))
    handlers = [h for h in logging.getLogger().handlers
                if isinstance(h, RotatingFileHandler) and h.baseFilename.endswith("idempotent.log")]
    assert len(handlers) == 1
    logging.getLogger().removeHandler(handlers[0])
    handlers[0].close()
