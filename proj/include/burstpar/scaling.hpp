// Copyright 2026 The burstpar Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "burstpar/graph.hpp"

namespace burstpar {

/// Steps to reach `target_error` as a function of the global batch,
/// interpolated linearly in log-log space between the points.
struct SampleEfficiencyCurve {
  double target_error = 0.0;
  std::vector<std::pair<std::int64_t, double>> points;  // (batch, steps)

  void validate() const;
  std::int64_t min_batch() const { return points.front().first; }
  std::int64_t max_batch() const { return points.back().first; }
  /// Throws kValidation outside [min_batch, max_batch].
  double steps_at(std::int64_t batch) const;
};

/// steps(B) = ceil(a / B + c) with a = c * critical_batch, sampled at powers
/// of two in [lo, hi].
SampleEfficiencyCurve synthetic_curve(double floor_steps = 1500.0,
                                      double critical_batch = 2048.0,
                                      std::int64_t lo = 16,
                                      std::int64_t hi = 131072,
                                      double target_error = 0.35);

SampleEfficiencyCurve curve_from_json(const nlohmann::json& doc);
nlohmann::json curve_to_json(const SampleEfficiencyCurve& curve);
SampleEfficiencyCurve load_curve(const std::filesystem::path& path);
void save_curve(const SampleEfficiencyCurve& curve, const std::filesystem::path& path);

enum class Strategy { kWeak, kStrong, kBatchOptimal };

const char* strategy_name(Strategy s);
Strategy parse_strategy(const std::string& name);

struct ScalingEstimate {
  Strategy strategy = Strategy::kWeak;
  int n_gpus = 1;
  std::int64_t chosen_global_batch = 0;
  double per_gpu_batch = 0.0;
  double iteration_time_us = 0.0;
  double steps = 0.0;
  double time_to_accuracy_s = 0.0;
  double speedup_vs_1gpu = 0.0;
};

/// Data-parallel iteration time: every layer's compute at per-device batch
/// ceil(global_batch / n_gpus) plus its gradient sync over n_gpus. Throws
/// kValidation when a layer's profile does not cover that batch.
double iteration_time(const CompGraph& graph, int n_gpus, std::int64_t global_batch,
                      const NetworkProfile& network);

/// True when every layer profile spans ceil(global_batch / n_gpus).
bool profile_covers(const CompGraph& graph, int n_gpus, std::int64_t global_batch);

/// Batch sizes searched by the batch-optimal strategy: the curve points,
/// geometric midpoints of neighbouring points, base_batch and
/// base_batch * n_gpus, restricted to the curve's domain.
std::vector<std::int64_t> batch_grid(const SampleEfficiencyCurve& curve, int n_gpus,
                                     std::int64_t base_batch);

/// Weak: base_batch per GPU. Strong: base_batch in total. Batch-optimal: the
/// grid batch with the lowest time to accuracy. Speedup is relative to one
/// GPU at base_batch.
ScalingEstimate estimate(Strategy strategy, const CompGraph& graph,
                         const SampleEfficiencyCurve& curve, int n_gpus,
                         const NetworkProfile& network, std::int64_t base_batch);

std::vector<ScalingEstimate> speedup_curve(Strategy strategy, const CompGraph& graph,
                                           const SampleEfficiencyCurve& curve,
                                           const std::vector<int>& gpu_counts,
                                           const NetworkProfile& network,
                                           std::int64_t base_batch);

/// Delimiter-separated table with a header row:
/// n_gpus,strategy,batch,iter_us,steps,tta_s,speedup
std::string estimates_to_csv(const std::vector<ScalingEstimate>& rows);

}  // namespace burstpar
