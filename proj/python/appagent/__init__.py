"""Python bindings for the proactive app agent core.

Values cross the boundary as JSON text; the helpers here decode them.
"""

import json

from . import _core
from ._core import AgentError, canonical, derive_task_id, normalize_query, trace_digest

__all__ = [
    "AgentError",
    "canonical",
    "derive_task_id",
    "normalize_query",
    "rank",
    "render_text",
    "run_task",
    "trace_digest",
]


def rank(query, items, page_size):
    return _core.rank(query, json.dumps(items), page_size)


def render_text(response):
    if not isinstance(response, str):
        response = json.dumps(response)
    return _core.render_text(response)


def run_task(query, catalog, script, mode="auto", budgets=""):
    """Run one task on a simulated catalog with a scripted backend.

    `catalog` and `script` may be parsed JSON or JSON text.
    """
    if not isinstance(catalog, str):
        catalog = json.dumps(catalog)
    if not isinstance(script, str):
        script = json.dumps(script)
    return json.loads(_core.run_task(query, catalog, script, mode, budgets))
