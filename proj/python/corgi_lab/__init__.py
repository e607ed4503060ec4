# Copyright 2026 The corgi-lab Authors.
# SPDX-License-Identifier: Apache-2.0
"""Python front end for the corgi_lab C++ core."""

import json

from ._corgi import (
    UsageError,
    cached_count,
    cka,
    contribution_scores,
    flops_block,
    identify_salient,
    kmeans_1d_two,
    masked_merge,
    plan_steps,
    rank_ascending,
)
from ._corgi import _analyze_json, _cli, _run_json

__all__ = [
    "UsageError",
    "analyze",
    "cached_count",
    "cka",
    "cli",
    "contribution_scores",
    "flops_block",
    "identify_salient",
    "kmeans_1d_two",
    "masked_merge",
    "plan_steps",
    "rank_ascending",
    "run",
]


def _settings(config, overrides):
    merged = dict(config or {})
    merged.update(overrides)
    return json.dumps(merged)


def run(config=None, **overrides):
    """Runs one configuration and returns the trace as a dict.

    Keys are the CLI flag names with '-' or '_', e.g. ``run(policy="corgi",
    gamma=2, seed=3)``. The result carries a ``reference_check`` entry.
    """
    return json.loads(_run_json(_settings(config, overrides)))


def analyze(config=None, **overrides):
    """Block-ablation maps and adjacent-step CKA for the configured model."""
    return json.loads(_analyze_json(_settings(config, overrides)))


def cli(args):
    """Runs the command-line front end; returns (exit_code, stdout, stderr)."""
    return _cli(list(args))
