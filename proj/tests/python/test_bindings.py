# Copyright 2026 The burstpar Authors. All Rights Reserved.
# SPDX-License-Identifier: Apache-2.0

import json

import pytest

import burstpar


@pytest.fixture(scope="module")
def vgg():
    return burstpar.generate_model("vgg_like", global_batch=32)


def test_version_and_families():
    assert burstpar.__version__
    assert "inception_like" in burstpar.model_families()


def test_graph_json_round_trip(vgg):
    again = burstpar.CompGraph.from_json(vgg.to_json())
    assert len(again) == len(vgg) == 21
    assert again.to_json() == vgg.to_json()
    assert vgg.with_global_batch(64).global_batch == 64


def test_single_gpu_plan_is_serial(vgg):
    p = burstpar.plan(vgg, 1, 2.0)
    doc = burstpar.plan_dict(vgg, p)
    assert all(layer["g"] == 1 for layer in doc["layers"])
    serial = sum(layer["comp_us"] for layer in doc["layers"])
    assert p.predicted_iteration_us == pytest.approx(serial, rel=1e-9)


def test_plan_matches_brute_force_on_small_chain():
    g = burstpar.generate_model("custom", layers=4, seed=7)
    fast = burstpar.plan(g, 4, 1.5)
    slow = burstpar.brute_force_plan(g, 4, 1.5)
    assert fast.predicted_iteration_us == pytest.approx(slow.predicted_iteration_us, rel=1e-9)


def test_amp_below_one_is_infeasible(vgg):
    with pytest.raises(burstpar.BurstparError) as info:
        burstpar.plan(vgg, 4, 0.5)
    assert info.value.kind == "infeasible instance"


def test_bad_json_is_parse_error():
    with pytest.raises(burstpar.BurstparError) as info:
        burstpar.CompGraph.from_json("{")
    assert info.value.kind == "parse error"


def test_speedup_curve_rows(vgg):
    rows = burstpar.speedup_curve(vgg, "weak", [1, 2, 4])
    assert [int(r["n_gpus"]) for r in rows] == [1, 2, 4]
    assert float(rows[0]["speedup"]) == pytest.approx(1.0)


def test_scenarios(vgg):
    dp = burstpar.run_scenario("dp", vgg, 8, iterations=4)
    col = burstpar.run_scenario("bp+col", vgg, 8, iterations=4)
    assert dp["qos_degradation"] == pytest.approx(1.0)
    assert col["cluster_total_throughput"] > dp["cluster_total_throughput"]
    assert col["bg_throughput_samples_per_s"] > 0


def test_scenario_is_deterministic(vgg):
    config = burstpar.default_sim_config()
    config["rng_seed"] = 3
    a = burstpar.run_scenario("bp+col", vgg, 4, iterations=3, config=config)
    b = burstpar.run_scenario("bp+col", vgg, 4, iterations=3, config=config)
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)


def test_pareto_sweep_rows(vgg):
    spec = {"amp_limits": [2.0], "bg_batches": [8], "partitions": [1, 4], "iterations": 3}
    rows = burstpar.pareto_sweep(vgg, 4, spec)
    assert sorted(r["label"] for r in rows) == ["bp+col", "partition", "partition"]
