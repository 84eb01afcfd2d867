// Copyright 2026 The burstpar Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "burstpar/graph.hpp"
#include "burstpar/planner.hpp"
#include "burstpar/synth.hpp"

namespace burstpar {

/// Simulation time unit: 0.1 us.
using Tick = std::int64_t;
inline constexpr Tick kTicksPerUs = 10;

/// Rounds a duration up to whole ticks.
Tick to_ticks(double us);

enum class OpKind { kCompute, kAllreduce, kTransfer };
enum class Priority { kHigh, kLow };

const char* op_kind_name(OpKind kind);

/// Interference classes: intensity (comm, light, heavy) x latency (short,
/// medium, long).
inline constexpr int kIntensityBuckets = 3;
inline constexpr int kLatencyBuckets = 3;
inline constexpr int kOpClasses = kIntensityBuckets * kLatencyBuckets;
inline constexpr double kShortOpUs = 100.0;
inline constexpr double kLongOpUs = 1000.0;

int op_class(int intensity, double isolated_us);
std::string op_class_label(int cls);

struct OpRecord {
  int op_id = 0;    // shared by every copy of the same logical op
  int task_id = 0;
  OpKind kind = OpKind::kCompute;
  double isolated_duration_us = 0.0;
  Priority stream_priority = Priority::kHigh;
  int group_id = 0;  // consecutive ops with one id form a launch group
  bool sensitive = false;
  std::int64_t payload_bytes = 0;
  int layer_id = -1;
  int op_class = 0;
  std::vector<int> participants;  // collectives start together on these GPUs

  bool is_collective() const { return kind != OpKind::kCompute; }
};

/// One task's per-iteration op lists, indexed by GPU. A replicated task is an
/// independent single-GPU job on every GPU (the background job).
struct TaskTimeline {
  int task_id = 0;
  std::string name;
  Priority priority = Priority::kHigh;
  bool replicated = false;
  double samples_per_iteration = 0.0;  // per GPU when replicated
  std::vector<std::vector<OpRecord>> per_gpu;
};

struct Timelines {
  int num_gpus = 1;
  std::vector<TaskTimeline> tasks;
};

struct InterferenceMatrix {
  // high[h][l]: slowdown of a high-priority op of class h while a
  // low-priority op of class l runs beside it; low[l][h] the reverse.
  std::array<std::array<double, kOpClasses>, kOpClasses> high{};
  std::array<std::array<double, kOpClasses>, kOpClasses> low{};
};

/// Factor applied per tick of overlapped execution; an op running alone
/// progresses at rate 1. `prioritized` applies when stream priorities are
/// on, `shared` when they are off.
struct InterferenceTable {
  InterferenceMatrix prioritized;
  InterferenceMatrix shared;

  void validate() const;
  /// Shipped synthetic table: short high-priority ops suffer most beside
  /// long low-priority ones, collectives more than double beside compute,
  /// and without priorities both sides share the device.
  static InterferenceTable synthetic();
  static InterferenceTable none();
};

nlohmann::json interference_to_json(const InterferenceTable& table);
InterferenceTable interference_from_json(const nlohmann::json& doc);
InterferenceTable load_interference(const std::filesystem::path& path);

/// Open-question defaults: pace limit 2 groups, split 32 ops, ban at 1.5x.
struct SimConfig {
  int launch_pace_limit = 2;  // outstanding groups per task, 0 = unbounded
  int graph_split_size = 32;  // ops per low-priority launch group
  int bg_batch_size = 8;
  double slowdown_ban_threshold = 1.5;
  bool priority_scheduling_enabled = true;
  std::uint64_t rng_seed = kDefaultSeed;
  int contexts = 2;
  double launch_overhead_us = 5.0;
  int stream_queue_depth = 2;       // groups a stream holds past the shared queue
  int device_queue_capacity = 64;   // groups in the shared queue
  double bg_start_jitter_us = 100.0;
  int warmup_iterations = 1;
  bool record_trace = true;

  void validate() const;
};

nlohmann::json config_to_json(const SimConfig& config);
/// Missing fields keep their defaults.
SimConfig config_from_json(const nlohmann::json& doc);
SimConfig load_config(const std::filesystem::path& path);

struct TimelineOptions {
  int num_gpus = 1;
  const CompGraph* background = nullptr;  // single-GPU copy on every GPU
  int bg_batch = 8;
  int graph_split_size = 32;
};

/// Expands a plan into per-GPU op lists for one iteration: forward compute
/// in layer order with a transfer collective wherever producer and consumer
/// sit on different device ranges, then backward in reverse order with an
/// allreduce after each replicated layer with parameters and the mirrored
/// gradient transfers. Every (layer, pass) is one launch group.
Timelines compile_timeline(const TrainingPlan& plan, const CompGraph& graph,
                           const TimelineOptions& options);

/// Every layer on all `gpus` devices.
TrainingPlan data_parallel_plan(const CompGraph& graph, int gpus);

void mark_sensitive(Timelines& timelines, const std::set<int>& op_ids);

struct TraceEvent {
  enum Kind { kLaunch, kDequeue, kStart, kEnd };
  Tick tick = 0;
  int gpu = 0;
  int task = 0;
  int op = 0;  // op id, or the first op id of a group
  int iteration = 0;
  Kind kind = kStart;
};

struct OpExec {
  int task = 0;
  int op_id = 0;
  int iteration = 0;
  std::vector<int> gpus;
  Tick start = 0;
  Tick end = 0;
  Tick isolated = 0;
};

struct SimMetrics {
  double fg_iteration_mean_us = 0.0;
  double fg_iteration_p99_us = 0.0;
  double fg_throughput_samples_per_s = 0.0;
  double bg_throughput_samples_per_s = 0.0;
  double cluster_total_throughput = 0.0;
  std::vector<double> gpu_utilization;
  double qos_degradation = 1.0;
  double isolated_fg_iteration_us = 0.0;
  int measured_iterations = 0;
};

struct SimResult {
  std::vector<TraceEvent> trace;
  std::vector<OpExec> ops;
  std::vector<Tick> iteration_end;  // of the primary task
  SimMetrics metrics;
};

/// Runs until the foreground task (or, without one, the first task on GPU 0)
/// completes `iterations` iterations; the first warmup_iterations are left
/// out of the metrics. Degradation compares against a run without the
/// low-priority tasks. Throws kDeadlock when queued work can never run.
SimResult simulate(const Timelines& timelines, const SimConfig& config,
                   const InterferenceTable& interference, int iterations);

/// Foreground op ids whose mean measured/isolated duration after warmup
/// exceeds the ban threshold.
std::set<int> feedback_update(const SimResult& result, const Timelines& timelines,
                              const SimConfig& config);

struct FeedbackRun {
  SimResult result;
  std::set<int> sensitive;
  int rounds = 0;  // simulate calls
  bool converged = false;
};

/// simulate + feedback_update until no new op is flagged or `max_rounds`
/// simulations have run.
FeedbackRun simulate_with_feedback(Timelines timelines, const SimConfig& config,
                                   const InterferenceTable& interference, int iterations,
                                   int max_rounds = 5);

std::string trace_to_csv(const SimResult& result);
nlohmann::json metrics_to_json(const SimMetrics& metrics);

enum class Scenario { kDp, kBp, kBpCol };
Scenario parse_scenario(const std::string& name);
const char* scenario_name(Scenario s);

struct ScenarioResult {
  TrainingPlan plan;
  FeedbackRun run;
};

/// DP: data-parallel plan alone. BP: planner plan alone. BP+Col: planner plan
/// with the background job (the same model at bg_batch_size) on every GPU,
/// with the slowdown feedback loop.
ScenarioResult run_scenario(Scenario scenario, const CompGraph& graph, int gpus,
                            double amp_limit, const SimConfig& config,
                            const InterferenceTable& interference, int iterations);

/// run_scenario with an explicit plan; the scenario then only decides
/// whether the background job runs.
ScenarioResult run_planned_scenario(Scenario scenario, const CompGraph& graph,
                                    TrainingPlan plan, int gpus, const SimConfig& config,
                                    const InterferenceTable& interference, int iterations);

struct SweepSpec {
  std::vector<double> amp_limits{1.0, 1.5, 2.0, 4.0};
  std::vector<int> bg_batches{4, 8, 16};
  std::vector<int> partitions{1, 2, 4, 8};
  int iterations = 4;
};

nlohmann::json sweep_spec_to_json(const SweepSpec& spec);
SweepSpec sweep_spec_from_json(const nlohmann::json& doc);

struct SweepRow {
  std::string label;  // "bp+col" or "partition"
  double amp_limit = 0.0;
  int bg_batch = 0;
  int fg_gpus = 0;
  double fg_iteration_us = 0.0;
  double fg_throughput = 0.0;
  double bg_throughput = 0.0;
  double cluster_throughput = 0.0;
  double fg_speedup = 0.0;  // vs one GPU running the foreground alone
};

/// BP+Col operating points over amp limits and background batches, plus the
/// cluster-partition baseline: k GPUs of data-parallel foreground and G - k
/// GPUs each running the background job alone.
std::vector<SweepRow> pareto_sweep(const CompGraph& graph, int gpus, const SweepSpec& spec,
                                   const SimConfig& config,
                                   const InterferenceTable& interference);

std::string sweep_to_csv(const std::vector<SweepRow>& rows);

}  // namespace burstpar
