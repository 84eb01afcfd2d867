// Copyright 2026 The burstpar Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "burstpar/cost_model.hpp"
#include "burstpar/decompose.hpp"
#include "burstpar/graph.hpp"

namespace burstpar {

struct PlannerOptions {
  /// Let non-critical branch chains run on their own devices.
  bool allow_concurrency = true;
  /// Empty: powers of two up to G.
  std::vector<int> candidates;
  Interpolation interpolation = Interpolation::kLinear;
};

/// Dynamic-programming tables of one linear search. Row 0 is the start row
/// (S = 0); row r + 1 belongs to layers[r]. Column k belongs to
/// candidates[k].
struct PlanTables {
  std::vector<int> layers;  // dense indices
  std::vector<int> candidates;
  double amp_limit = 0.0;
  std::vector<std::vector<double>> S;  // infinity when unreachable
  std::vector<std::vector<double>> T;  // time spent on the layer itself
  std::vector<std::vector<int>> choice;  // predecessor g, -1 for none
  std::vector<std::vector<int>> violations;  // amp violations on the path
  std::vector<std::vector<bool>> fallback;   // no admissible predecessor
};

struct Assignment {
  int layer_id = 0;
  int g = 1;
  int device_offset = 0;  // first device of the contiguous range
};

/// How one branch/join block was merged.
struct BlockChoice {
  int branch_layer_id = 0;
  int join_layer_id = 0;
  int branch_g = 1;
  int join_g = 1;
  std::vector<int> concurrent_chains;  // chain positions, ascending
  int serial_cap = 0;                  // devices available to serial chains
  std::vector<int> chain_caps;         // per concurrent chain
  double time_us = 0.0;                // block edge time
};

struct TrainingPlan {
  int total_gpus = 1;
  double amp_limit = 0.0;
  double predicted_iteration_us = 0.0;
  std::vector<Assignment> assignments;  // graph layer order
  std::vector<LayerCost> costs;         // graph layer order
  std::vector<int> fallback_layers;     // layer ids
  std::vector<BlockChoice> blocks;
  double search_wall_s = 0.0;  // not serialized

  int g_of(int layer_id) const;
  const Assignment& assignment_of(int layer_id) const;
};

/// Linear search over `chain` (dense indices, consecutive layers joined by
/// direct edges). A predecessor is admissible when the layer's
/// amplification, including the transfer charged on that edge, stays within
/// `amp_limit`; with no admissible predecessor the minimum-amplification one
/// is taken and the state is marked as a fallback. `entry_g` pins the first
/// layer's GPU count.
PlanTables search_linear(const std::vector<int>& chain, const CostContext& ctx,
                         double amp_limit,
                         std::optional<int> entry_g = std::nullopt);

/// Picks the final g (fewest violations, then lowest S, then smaller g) and
/// follows the choice pointers.
TrainingPlan backtrace(const PlanTables& tables, const CostContext& ctx);

/// Full search over the block decomposition of `graph`.
TrainingPlan reduce_multichain(const CompGraph& graph, const CostContext& ctx,
                               double amp_limit,
                               const PlannerOptions& options = {});

/// Edge time from `block` on g GPUs into its successor layer `to` on h GPUs:
/// the activation transfer for a single layer, the merged branch cost for a
/// branch/join block (whose join must be `to`). Infinity when no admissible
/// schedule exists.
double transition_time(const CostContext& ctx, const Block& block, int g,
                       int to, int h, double amp_limit,
                       const PlannerOptions& options = {});

/// Entry point. `global_batch` <= 0 keeps the graph's batch.
TrainingPlan plan(const CompGraph& graph, int total_gpus, double amp_limit,
                  int global_batch = 0, const PlannerOptions& options = {});

/// Exhaustive search with the same cost calls and admissibility rules; for
/// tests on small instances only.
TrainingPlan brute_force_plan(const CompGraph& graph, int total_gpus,
                              double amp_limit,
                              const PlannerOptions& options = {});

nlohmann::json plan_to_json(const CompGraph& graph, const TrainingPlan& plan);
TrainingPlan plan_from_json(const nlohmann::json& doc);
TrainingPlan load_plan(const std::filesystem::path& path);
void save_plan(const CompGraph& graph, const TrainingPlan& plan,
               const std::filesystem::path& path);
/// Per-layer table for terminals.
std::string plan_summary(const CompGraph& graph, const TrainingPlan& plan);

}  // namespace burstpar
