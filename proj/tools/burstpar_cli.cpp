// Copyright 2026 The burstpar Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

// burstpar command-line tool. Every command writes its outputs plus
// <out>.manifest.json; `replay` re-runs a manifest and checks the outputs.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "burstpar/error.hpp"
#include "burstpar/graph.hpp"
#include "burstpar/manifest.hpp"
#include "burstpar/planner.hpp"
#include "burstpar/scaling.hpp"
#include "burstpar/sim.hpp"
#include "burstpar/synth.hpp"

namespace {

using namespace burstpar;
using nlohmann::json;
namespace fs = std::filesystem;

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::FILE* f = std::fopen(path.string().c_str(), "wb");
  if (f == nullptr) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  bool ok = std::fwrite(text.data(), 1, text.size(), f) == text.size();
  ok = std::fclose(f) == 0 && ok;
  if (!ok) throw Error(ErrorKind::kIo, "failed writing " + path.string());
}

// Network and batch overrides shared by several commands.
struct GraphOptions {
  std::string graph;
  int global_batch = 0;
  double bandwidth = 0.0;
  double delay = -1.0;

  void add(CLI::App* app, bool batch = true) {
    app->add_option("--graph", graph, "graph + profile file")->required()->check(CLI::ExistingFile);
    if (batch) app->add_option("--global-batch", global_batch, "override the global batch");
    app->add_option("--bandwidth", bandwidth, "override per-GPU bandwidth (bytes/s)")
        ->check(CLI::PositiveNumber);
    app->add_option("--delay", delay, "override propagation delay (us)")
        ->check(CLI::NonNegativeNumber);
  }

  CompGraph load() const {
    CompGraph g = load_graph(graph);
    if (global_batch > 0) g = with_global_batch(g, global_batch);
    NetworkProfile net = g.network();
    if (bandwidth > 0.0) net.bandwidth_bytes_per_sec = bandwidth;
    if (delay >= 0.0) net.propagation_delay_us = delay;
    return with_network(g, net);
  }

  void record(json& params) const {
    params["global_batch"] = global_batch;
    params["bandwidth"] = bandwidth;
    params["delay"] = delay;
  }
};

// Simulator knobs; flags override the optional config file.
struct SimOptions {
  std::string config_file;
  std::string interference_file;
  std::optional<int> pace_limit, graph_split, bg_batch;
  std::optional<double> ban_threshold;
  std::optional<std::uint64_t> seed;
  bool no_priority = false;

  void add(CLI::App* app) {
    app->add_option("--sim-config", config_file, "simulator config file")->check(CLI::ExistingFile);
    app->add_option("--interference", interference_file, "interference table file")
        ->check(CLI::ExistingFile);
    app->add_option("--pace-limit", pace_limit, "outstanding launch groups per task (0 = unbounded)");
    app->add_option("--graph-split", graph_split, "ops per background launch group");
    app->add_option("--bg-batch", bg_batch, "background job batch size");
    app->add_option("--ban-threshold", ban_threshold, "slowdown above which ops are isolated");
    app->add_option("--seed", seed, "random seed");
    app->add_flag("--no-priority", no_priority, "disable stream priorities");
  }

  SimConfig config() const {
    SimConfig c = config_file.empty() ? SimConfig{} : load_config(config_file);
    if (pace_limit) c.launch_pace_limit = *pace_limit;
    if (graph_split) c.graph_split_size = *graph_split;
    if (bg_batch) c.bg_batch_size = *bg_batch;
    if (ban_threshold) c.slowdown_ban_threshold = *ban_threshold;
    if (seed) c.rng_seed = *seed;
    if (no_priority) c.priority_scheduling_enabled = false;
    c.validate();
    return c;
  }

  InterferenceTable table() const {
    return interference_file.empty() ? InterferenceTable::synthetic()
                                     : load_interference(interference_file);
  }

  void inputs(RunManifest& m) const {
    if (!config_file.empty()) m.inputs.push_back(hashed_file("sim_config", config_file));
    if (!interference_file.empty()) {
      m.inputs.push_back(hashed_file("interference", interference_file));
    }
  }
};

struct Cli {
  std::vector<std::string> args;
  std::string out;

  // profile-gen
  std::string family;
  SynthOptions synth;
  double bandwidth = 0.0, delay = -1.0;

  // plan / simulate / sweep
  GraphOptions graph;
  int gpus = 8;
  double amp_limit = 2.0;
  bool no_concurrency = false;

  // analyze
  std::string curve_file;
  std::string strategy = "all";
  std::vector<int> gpu_counts{1, 2, 4, 8, 16, 32, 64, 128, 256};

  // simulate / sweep
  SimOptions sim;
  std::string plan_file;
  std::string scenario = "bp+col";
  int iterations = 6;
  std::string sweep_file;

  // replay
  std::string manifest_file;
  std::string replay_out;

  RunManifest manifest(const std::string& command) const {
    RunManifest m;
    m.command = command;
    m.args = args;
    m.tool_version = tool_version();
    return m;
  }

  void finish(RunManifest& m, std::chrono::steady_clock::time_point t0) const {
    m.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    save_manifest(m, manifest_path_for(out));
  }

  int profile_gen() {
    auto t0 = std::chrono::steady_clock::now();
    if (bandwidth > 0.0) synth.network.bandwidth_bytes_per_sec = bandwidth;
    if (delay >= 0.0) synth.network.propagation_delay_us = delay;
    CompGraph g = generate_model(family, synth);
    write_file(out, graph_to_json(g).dump(2) + "\n");
    RunManifest m = manifest("profile-gen");
    m.params = {{"family", family},          {"global_batch", synth.global_batch},
                {"depth", synth.depth},      {"layers", synth.layers},
                {"seed", synth.seed},        {"bandwidth", synth.network.bandwidth_bytes_per_sec},
                {"delay", synth.network.propagation_delay_us}};
    m.outputs.push_back(hashed_file("graph", out));
    finish(m, t0);
    std::cout << family << ": " << g.size() << " layers, " << param_count(g)
              << " parameters -> " << out << "\n";
    return 0;
  }

  PlannerOptions planner_options() const {
    PlannerOptions o;
    o.allow_concurrency = !no_concurrency;
    return o;
  }

  int plan_cmd() {
    auto t0 = std::chrono::steady_clock::now();
    CompGraph g = graph.load();
    TrainingPlan p = plan(g, gpus, amp_limit, 0, planner_options());
    save_plan(g, p, out);
    std::cout << plan_summary(g, p);
    std::printf("search wall time: %.3f s\n", p.search_wall_s);
    RunManifest m = manifest("plan");
    m.inputs.push_back(hashed_file("graph", graph.graph));
    m.params = {{"gpus", gpus},
                {"amp_limit", amp_limit},
                {"allow_concurrency", !no_concurrency},
                {"search_wall_s", p.search_wall_s}};
    graph.record(m.params);
    m.outputs.push_back(hashed_file("plan", out));
    finish(m, t0);
    return 0;
  }

  int analyze() {
    auto t0 = std::chrono::steady_clock::now();
    CompGraph g = graph.load();
    SampleEfficiencyCurve curve = curve_file.empty() ? synthetic_curve() : load_curve(curve_file);
    std::vector<Strategy> strategies;
    if (strategy == "all") {
      strategies = {Strategy::kWeak, Strategy::kStrong, Strategy::kBatchOptimal};
    } else {
      strategies = {parse_strategy(strategy)};
    }
    const std::int64_t base = graph.global_batch > 0 ? graph.global_batch : g.global_batch();
    std::vector<ScalingEstimate> rows;
    for (Strategy s : strategies) {
      auto part = speedup_curve(s, g, curve, gpu_counts, g.network(), base);
      rows.insert(rows.end(), part.begin(), part.end());
    }
    std::string csv = estimates_to_csv(rows);
    write_file(out, csv);
    std::cout << csv;
    RunManifest m = manifest("analyze");
    m.inputs.push_back(hashed_file("graph", graph.graph));
    if (!curve_file.empty()) m.inputs.push_back(hashed_file("curve", curve_file));
    m.params = {{"strategy", strategy}, {"gpu_counts", gpu_counts}, {"base_batch", base}};
    graph.record(m.params);
    m.outputs.push_back(hashed_file("table", out));
    finish(m, t0);
    return 0;
  }

  int simulate_cmd() {
    auto t0 = std::chrono::steady_clock::now();
    CompGraph g = graph.load();
    SimConfig config = sim.config();
    Scenario sc = parse_scenario(scenario);
    ScenarioResult r;
    if (!plan_file.empty()) {
      TrainingPlan p = load_plan(plan_file);
      r = run_planned_scenario(sc, g, p, std::max(gpus, p.total_gpus), config, sim.table(),
                               iterations);
    } else {
      r = run_scenario(sc, g, gpus, amp_limit, config, sim.table(), iterations);
    }
    const SimMetrics& mt = r.run.result.metrics;
    json metrics = metrics_to_json(mt);
    metrics["scenario"] = scenario;
    metrics["predicted_iteration_us"] = r.plan.predicted_iteration_us;
    metrics["feedback_rounds"] = r.run.rounds;
    metrics["sensitive_ops"] = std::vector<int>(r.run.sensitive.begin(), r.run.sensitive.end());
    const fs::path metrics_path = out + ".metrics.json";
    const fs::path trace_path = out + ".trace.csv";
    write_file(metrics_path, metrics.dump(2) + "\n");
    write_file(trace_path, trace_to_csv(r.run.result));
    std::printf("%s: fg iteration %.1f us (p99 %.1f), fg %.1f samples/s, bg %.1f samples/s, "
                "cluster %.1f samples/s, degradation %.3f\n",
                scenario.c_str(), mt.fg_iteration_mean_us, mt.fg_iteration_p99_us,
                mt.fg_throughput_samples_per_s, mt.bg_throughput_samples_per_s,
                mt.cluster_total_throughput, mt.qos_degradation);
    RunManifest m = manifest("simulate");
    m.inputs.push_back(hashed_file("graph", graph.graph));
    if (!plan_file.empty()) m.inputs.push_back(hashed_file("plan", plan_file));
    sim.inputs(m);
    m.params = {{"gpus", gpus},
                {"amp_limit", amp_limit},
                {"scenario", scenario},
                {"iterations", iterations},
                {"sim_config", config_to_json(config)}};
    graph.record(m.params);
    m.outputs.push_back(hashed_file("metrics", metrics_path));
    m.outputs.push_back(hashed_file("trace", trace_path));
    finish(m, t0);
    return 0;
  }

  int sweep() {
    auto t0 = std::chrono::steady_clock::now();
    CompGraph g = graph.load();
    SimConfig config = sim.config();
    SweepSpec spec = sweep_file.empty() ? SweepSpec{}
                                        : sweep_spec_from_json(read_json(sweep_file));
    std::vector<SweepRow> rows = pareto_sweep(g, gpus, spec, config, sim.table());
    std::string csv = sweep_to_csv(rows);
    write_file(out, csv);
    std::cout << csv;
    RunManifest m = manifest("sweep");
    m.inputs.push_back(hashed_file("graph", graph.graph));
    if (!sweep_file.empty()) m.inputs.push_back(hashed_file("sweep_spec", sweep_file));
    sim.inputs(m);
    m.params = {{"gpus", gpus},
                {"sweep", sweep_spec_to_json(spec)},
                {"sim_config", config_to_json(config)}};
    graph.record(m.params);
    m.outputs.push_back(hashed_file("table", out));
    finish(m, t0);
    return 0;
  }

  static json read_json(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::kIo, "cannot open " + path);
    try {
      return json::parse(in);
    } catch (const json::parse_error& e) {
      throw Error(ErrorKind::kParse, path + ": " + e.what());
    }
  }
};

int run(std::vector<std::string> args);

// Replays a manifest: inputs must still hash to the recorded values, and the
// regenerated outputs must match byte for byte.
int replay(const std::string& manifest_file, const std::string& new_out) {
  RunManifest m = load_manifest(manifest_file);
  std::vector<std::string> bad = verify_files(m.inputs);
  if (!bad.empty()) {
    std::string msg = "inputs changed since the manifest was written:";
    for (const std::string& b : bad) msg += "\n  " + b;
    throw Error(ErrorKind::kValidation, msg);
  }
  std::vector<std::string> args = m.args;
  std::string old_out;
  for (std::size_t i = 0; i + 1 < args.size(); ++i) {
    if (args[i] == "--out") {
      old_out = args[i + 1];
      if (!new_out.empty()) args[i + 1] = new_out;
    }
  }
  if (int rc = run(args); rc != 0) return rc;
  std::vector<ManifestFile> expect = m.outputs;
  if (!new_out.empty() && !old_out.empty()) {
    for (ManifestFile& f : expect) {
      if (f.path.rfind(old_out, 0) == 0) f.path = new_out + f.path.substr(old_out.size());
    }
  }
  bad = verify_files(expect);
  if (!bad.empty()) {
    std::string msg = "replay produced different outputs:";
    for (const std::string& b : bad) msg += "\n  " + b;
    throw Error(ErrorKind::kValidation, msg);
  }
  std::cout << "replay of " << m.command << ": " << expect.size()
            << " output(s) byte-identical\n";
  return 0;
}

int run(std::vector<std::string> args) {
  Cli cli;
  cli.args = args;
  CLI::App app{"burstpar: burst-parallel training planner and cluster simulator"};
  app.set_version_flag("--version", std::string(tool_version()));
  app.require_subcommand(1);

  CLI::App* gen = app.add_subcommand("profile-gen", "write a synthetic graph + profile file");
  gen->add_option("--family", cli.family, "vgg_like, wideresnet_like, inception_like or custom")
      ->required();
  gen->add_option("--global-batch", cli.synth.global_batch, "global batch")->check(CLI::PositiveNumber);
  gen->add_option("--depth", cli.synth.depth, "vgg_like depth (11 or 16)");
  gen->add_option("--layers", cli.synth.layers, "custom chain length")->check(CLI::PositiveNumber);
  gen->add_option("--seed", cli.synth.seed, "random seed");
  gen->add_option("--bandwidth", cli.bandwidth, "per-GPU bandwidth (bytes/s)")->check(CLI::PositiveNumber);
  gen->add_option("--delay", cli.delay, "propagation delay (us)")->check(CLI::NonNegativeNumber);
  gen->add_option("--out", cli.out, "output graph file")->required();

  CLI::App* pl = app.add_subcommand("plan", "plan burst-parallel training");
  cli.graph.add(pl);
  pl->add_option("--gpus", cli.gpus, "GPUs available")->check(CLI::PositiveNumber);
  pl->add_option("--amp-limit", cli.amp_limit, "amplification limit (inf for none)");
  pl->add_flag("--no-concurrency", cli.no_concurrency, "run parallel branches one after another");
  pl->add_option("--out", cli.out, "output plan file")->required();

  CLI::App* an = app.add_subcommand("analyze", "data-parallel scaling analysis");
  cli.graph.add(an);
  an->add_option("--curve", cli.curve_file, "sample-efficiency curve (default: synthetic)")
      ->check(CLI::ExistingFile);
  an->add_option("--strategy", cli.strategy, "weak, strong, batch_optimal or all");
  an->add_option("--gpu-counts", cli.gpu_counts, "comma-separated GPU counts")->delimiter(',');
  an->add_option("--out", cli.out, "output table")->required();

  CLI::App* si = app.add_subcommand("simulate", "simulate a scenario on a cluster");
  cli.graph.add(si);
  si->add_option("--plan", cli.plan_file, "plan file (default: plan on the fly)")
      ->check(CLI::ExistingFile);
  si->add_option("--gpus", cli.gpus, "simulated GPUs")->check(CLI::PositiveNumber);
  si->add_option("--amp-limit", cli.amp_limit, "amplification limit when planning");
  si->add_option("--scenario", cli.scenario, "dp, bp or bp+col")
      ->check(CLI::IsMember({"dp", "bp", "bp+col"}));
  si->add_option("--iterations", cli.iterations, "foreground iterations (first is warmup)")
      ->check(CLI::PositiveNumber);
  cli.sim.add(si);
  si->add_option("--out", cli.out, "output prefix (.metrics.json, .trace.csv)")->required();

  CLI::App* sw = app.add_subcommand("sweep", "foreground speedup vs cluster throughput");
  cli.graph.add(sw);
  sw->add_option("--gpus", cli.gpus, "simulated GPUs")->check(CLI::PositiveNumber);
  sw->add_option("--sweep-spec", cli.sweep_file, "sweep spec file")->check(CLI::ExistingFile);
  cli.sim.add(sw);
  sw->add_option("--out", cli.out, "output table")->required();

  CLI::App* rp = app.add_subcommand("replay", "re-run a manifest and compare outputs");
  rp->add_option("manifest", cli.manifest_file, "manifest file")->required()->check(CLI::ExistingFile);
  rp->add_option("--out", cli.replay_out, "write outputs here instead of the recorded path");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_code_for(ErrorKind::kUsage);
  }
  if (*gen) return cli.profile_gen();
  if (*pl) return cli.plan_cmd();
  if (*an) return cli.analyze();
  if (*si) return cli.simulate_cmd();
  if (*sw) return cli.sweep();
  return replay(cli.manifest_file, cli.replay_out);
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(std::vector<std::string>(argv + 1, argv + argc));
  } catch (const Error& e) {
    std::cerr << "error (" << error_kind_name(e.kind()) << "): " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
