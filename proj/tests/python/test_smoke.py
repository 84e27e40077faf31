import base64
import hashlib
import json
import os
from pathlib import Path

import pytest

import appagent

FIXTURES = Path(os.environ.get("APPAGENT_FIXTURES", Path(__file__).resolve().parents[1] / "fixtures"))
CATALOG = json.loads((FIXTURES / "catalog.json").read_text())
SCRIPT = json.loads((FIXTURES / "scenarios.json").read_text())


def test_normalize_query():
    assert appagent.normalize_query("  HOW   many Hours??") == "how many hours"
    assert appagent.normalize_query("How to keep a cat?") == "how to keep a cat"


def test_rank_matches_examples():
    items = [
        {"item_id": "1", "title": "zebra crossing"},
        {"item_id": "2", "title": "red apple"},
        {"item_id": "3", "title": "green apple"},
    ]
    assert appagent.rank("apple", items, 5) == ["3", "2"]
    assert appagent.rank("nothing", items, 5) == []


def test_direct_answer():
    out = appagent.run_task("How many hours are there in one day?", CATALOG, SCRIPT)
    assert out["phase"] == "done"
    assert out["events"] == ["task_accepted", "comprehension_done", "integration_done", "task_completed"]
    assert out["response"]["summary"] == "There are 24 hours in one day."
    assert out["trace"]["steps"] == []


def test_screenshot_scenario():
    out = appagent.run_task("How to upload a video on YouTube?", CATALOG, SCRIPT)
    assert out["phase"] == "done"
    attachments = out["response"]["attachments"]
    assert list(attachments) == ["shot-2a2d909980a72245"]
    shot = attachments["shot-2a2d909980a72245"]
    assert shot["media_kind"] == "text/x-simshot"
    data = base64.b64decode(shot["bytes"])
    assert hashlib.sha256(data).hexdigest().startswith("2a2d909980a72245")
    assert data.startswith(b"SIMSHOT\nvideo\n")
    assert appagent.trace_digest(json.dumps(out["trace"])) == out["trace_digest"]


def test_repeat_runs_are_identical():
    a = appagent.run_task("How to keep a cat?", CATALOG, SCRIPT)
    b = appagent.run_task("How to keep a cat?", CATALOG, SCRIPT)
    assert a["trace_digest"] == b["trace_digest"]
    assert appagent.canonical(json.dumps(a["response"])) == appagent.canonical(json.dumps(b["response"]))
    assert len(a["response"]["sections"]) == 2


def test_render_text():
    out = appagent.run_task("How to keep a cat?", CATALOG, SCRIPT)
    text = appagent.render_text(out["response"])
    assert text.index("## Cat care videos") < text.index("## Supplies")
    assert appagent.render_text({"task_id": "t", "summary": "Hi.", "sections": [], "attachments": {}, "provenance": {}}) == "Hi.\n"


def test_failures_are_reported():
    out = appagent.run_task("anything", CATALOG, {"entries": []})
    assert out["phase"] == "failed"
    assert out["error_kind"] == "malformed_backend_output"
    with pytest.raises(ValueError):
        appagent.run_task("anything", CATALOG, SCRIPT, budgets="P=0")
    with pytest.raises(appagent.AgentError):
        appagent.run_task("anything", "not json", SCRIPT)


def test_task_ids():
    assert appagent.derive_task_id("How to keep a cat?", "deep").startswith("task-")
    assert len(appagent.derive_task_id("x", "auto")) == 17
