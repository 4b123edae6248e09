"""stdin/stdout JSON bridge used by the numbered scripts"""

import io
import json
import math

import numpy as np
import pytest

from n8n_json_handler import create_n8n_processor, first_item, run_processor_from_file, to_json_safe


def feed_stdin(monkeypatch, text):
    monkeypatch.setattr("sys.stdin", io.TextIOWrapper(io.BytesIO(text.encode("utf-8"))))


class TestToJsonSafe:
    def test_numpy_and_non_finite_values(self):
        payload = to_json_safe({"a": np.float64(1.5), "b": np.arange(3), "c": math.inf,
                                "d": (np.int64(2), float("nan"))})
        assert payload == {"a": 1.5, "b": [0, 1, 2], "c": None, "d": [2, None]}
        json.dumps(payload)


class TestFirstItem:
    def test_list_and_dict(self):
        assert first_item([{"config": "a"}, {"config": "b"}]) == {"config": "a"}
        assert first_item({"config": "a"}) == {"config": "a"}

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            first_item([])
        with pytest.raises(ValueError):
            first_item([3])


class TestProcessor:
    def test_round_trip_with_batch_unwrapping(self, monkeypatch, capsys):
        feed_stdin(monkeypatch, json.dumps({"batch": [{"n": 4}]}))
        create_n8n_processor(lambda data: {"n": first_item(data)["n"] * 2,
                                           "x": np.float32(0.5)})()
        assert json.loads(capsys.readouterr().out) == {"n": 8, "x": 0.5}

    def test_processing_error_payload(self, monkeypatch, capsys):
        feed_stdin(monkeypatch, "{}")

        def fail(data):
            raise ValueError("no config")

        create_n8n_processor(fail)()
        payload = json.loads(capsys.readouterr().out)
        assert payload["success"] is False
        assert "no config" in payload["error"]

    def test_invalid_json(self, monkeypatch, capsys):
        feed_stdin(monkeypatch, "{broken")
        create_n8n_processor(lambda data: data)()
        assert json.loads(capsys.readouterr().out)["success"] is False

    def test_from_file(self, tmp_path):
        path = tmp_path / "request.json"
        path.write_text(json.dumps([{"n": 3}]))
        assert run_processor_from_file(path, lambda data: first_item(data)["n"]) == 3
        assert run_processor_from_file(tmp_path / "absent.json", lambda data: data) is None
