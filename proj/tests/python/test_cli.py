# Copyright 2026 The burstpar Authors. All Rights Reserved.
# SPDX-License-Identifier: Apache-2.0
"""Smoke tests for the burstpar executable (path in $BURSTPAR_CLI)."""

import csv
import json
import os
import subprocess

import pytest

CLI = os.environ.get("BURSTPAR_CLI", "burstpar")


def run(*args, cwd=None):
    return subprocess.run([CLI, *map(str, args)], cwd=cwd, capture_output=True, text=True)


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    r = run("profile-gen", "--family", "vgg_like", "--global-batch", 32, "--out", d / "vgg.json")
    assert r.returncode == 0, r.stderr
    return d


def test_usage_errors_exit_2():
    assert run().returncode == 2
    assert run("plan").returncode == 2
    assert run("frobnicate").returncode == 2
    assert run("--help").returncode == 0


def test_profile_gen_manifest(workdir):
    m = json.loads((workdir / "vgg.json.manifest.json").read_text())
    assert m["command"] == "profile-gen"
    assert m["outputs"][0]["role"] == "graph"
    assert len(m["outputs"][0]["sha256"]) == 64


def test_single_gpu_plan(workdir):
    out = workdir / "p1.json"
    r = run("plan", "--graph", workdir / "vgg.json", "--gpus", 1, "--out", out)
    assert r.returncode == 0, r.stderr
    doc = json.loads(out.read_text())
    assert all(layer["g"] == 1 for layer in doc["layers"])
    assert all(layer["sync_us"] == 0 and layer["transfer_in_us"] == 0 for layer in doc["layers"])
    serial = sum(layer["comp_us"] for layer in doc["layers"])
    assert doc["predicted_iteration_us"] == pytest.approx(serial, rel=1e-9)
    m = json.loads((workdir / "p1.json.manifest.json").read_text())
    assert "search_wall_s" in m["params"]


def test_error_exit_codes(workdir):
    bad = workdir / "bad.json"
    bad.write_text("{")
    assert run("plan", "--graph", bad, "--out", workdir / "x.json").returncode == 3
    r = run("plan", "--graph", workdir / "vgg.json", "--amp-limit", 0.5, "--out", workdir / "x.json")
    assert r.returncode == 5

    # 0 -> {1, 2}; 1 -> {3, 4}; 2 -> 4; 3, 4 -> 5 is not branch/join reducible.
    g = workdir / "g6.json"
    assert run("profile-gen", "--family", "custom", "--layers", 6, "--out", g).returncode == 0
    doc = json.loads(g.read_text())
    succ = [[1, 2], [3, 4], [4], [5], [5], []]
    for layer in doc["layers"]:
        i = layer["id"]
        layer["successors"] = succ[i]
        layer["predecessors"] = [j for j in range(6) if i in succ[j]]
    crossed = workdir / "crossed.json"
    crossed.write_text(json.dumps(doc))
    r = run("plan", "--graph", crossed, "--gpus", 2, "--out", workdir / "x.json")
    assert r.returncode == 6, r.stderr


def test_simulate_is_deterministic(workdir):
    g = workdir / "vgg.json"
    args = ["simulate", "--graph", g, "--gpus", 4, "--iterations", 3, "--seed", 11]
    assert run(*args, "--out", workdir / "a").returncode == 0
    assert run(*args, "--out", workdir / "b").returncode == 0
    assert run(*args[:-1], 12, "--out", workdir / "c").returncode == 0
    a = (workdir / "a.trace.csv").read_bytes()
    assert a == (workdir / "b.trace.csv").read_bytes()
    assert a != (workdir / "c.trace.csv").read_bytes()
    assert a.startswith(b"tick,gpu,task,op,iteration,event\n")
    metrics = json.loads((workdir / "a.metrics.json").read_text())
    assert metrics["scenario"] == "bp+col"
    assert metrics["bg_throughput_samples_per_s"] > 0


def test_replay(workdir):
    g = workdir / "vgg.json"
    r = run("simulate", "--graph", g, "--gpus", 2, "--iterations", 3, "--scenario", "bp",
            "--out", workdir / "r")
    assert r.returncode == 0, r.stderr
    r = run("replay", workdir / "r.manifest.json", "--out", workdir / "r2")
    assert r.returncode == 0, r.stderr
    assert (workdir / "r.trace.csv").read_bytes() == (workdir / "r2.trace.csv").read_bytes()

    tampered = workdir / "t.json"
    tampered.write_bytes(g.read_bytes())
    r = run("plan", "--graph", tampered, "--gpus", 2, "--out", workdir / "t.plan.json")
    assert r.returncode == 0
    with open(tampered, "a") as f:
        f.write(" ")
    r = run("replay", workdir / "t.plan.json.manifest.json")
    assert r.returncode == 4
    assert "hash mismatch" in r.stderr


def test_analyze_and_sweep(workdir):
    g = workdir / "vgg.json"
    out = workdir / "scaling.csv"
    r = run("analyze", "--graph", g, "--strategy", "weak", "--gpu-counts", "1,2,4", "--out", out)
    assert r.returncode == 0, r.stderr
    rows = list(csv.DictReader(out.open()))
    assert [int(row["n_gpus"]) for row in rows] == [1, 2, 4]

    spec = workdir / "spec.json"
    spec.write_text(json.dumps({"amp_limits": [2.0], "bg_batches": [8], "partitions": [2],
                                "iterations": 3}))
    out = workdir / "sweep.csv"
    r = run("sweep", "--graph", g, "--gpus", 4, "--sweep-spec", spec, "--out", out)
    assert r.returncode == 0, r.stderr
    labels = [row["label"] for row in csv.DictReader(out.open())]
    assert labels == ["bp+col", "partition"]
