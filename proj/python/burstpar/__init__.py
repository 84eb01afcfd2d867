# Copyright 2026 The burstpar Authors. All Rights Reserved.
# SPDX-License-Identifier: Apache-2.0
"""Burst-parallel training planner and cluster simulator."""

import csv
import io
import json

from burstpar._core import (
    BurstparError,
    CompGraph,
    TrainingPlan,
    __version__,
    brute_force_plan,
    generate_model,
    model_families,
    param_count,
    plan,
    plan_summary,
)
from burstpar import _core


def _dump(obj):
    return "" if obj is None else json.dumps(obj)


def _rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def plan_dict(graph, training_plan):
    return json.loads(_core.plan_to_json(graph, training_plan))


def default_sim_config():
    return json.loads(_core.default_sim_config())


def speedup_curve(graph, strategy, gpu_counts, base_batch=0, curve=None):
    """Rows of the scaling table as dicts of strings."""
    return _rows(_core.speedup_csv(graph, strategy, list(gpu_counts), base_batch, _dump(curve)))


def run_scenario(scenario, graph, gpus, amp_limit=2.0, iterations=6, config=None,
                 interference=None):
    """Metrics dict for one of "dp", "bp", "bp+col"."""
    return json.loads(_core.run_scenario(scenario, graph, gpus, amp_limit, iterations,
                                         _dump(config), _dump(interference)))


def pareto_sweep(graph, gpus, spec=None, config=None):
    return _rows(_core.pareto_sweep_csv(graph, gpus, _dump(spec), _dump(config)))


__all__ = [
    "BurstparError",
    "CompGraph",
    "TrainingPlan",
    "__version__",
    "brute_force_plan",
    "default_sim_config",
    "generate_model",
    "model_families",
    "param_count",
    "pareto_sweep",
    "plan",
    "plan_dict",
    "plan_summary",
    "run_scenario",
    "speedup_curve",
]
