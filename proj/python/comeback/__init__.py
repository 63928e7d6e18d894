"""Python bindings for the comeback researcher analysis core."""

import json

from ._core import *  # noqa: F401,F403
from ._core import __version__, _generate_corpus, _run_pipeline


def generate_corpus(config=None):
    """Returns (papers, truth) for a synthetic corpus config dict."""
    lines, truth = _generate_corpus(json.dumps(config or {}))
    papers = [json.loads(line) for line in lines.splitlines() if line]
    return papers, json.loads(truth)


def run_pipeline(config, force=False):
    """Runs every stage for a pipeline config dict; returns {stage: ran}."""
    return dict(_run_pipeline(json.dumps(config), force))
