// Copyright 2026 The burstpar Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "burstpar/graph.hpp"

namespace burstpar {

/// payload / bandwidth + propagation delay, in microseconds.
double comm_time(double payload_bytes, const NetworkProfile& network);

/// Samples whose owning device changes when B samples, split into contiguous
/// ceil-sized chunks, go from g devices to h devices.
std::int64_t moved_samples(int global_batch, int g, int h);

/// Forward activations plus backward gradients for the edge `from` -> `to`
/// (dense indices) when `from` runs on g devices and `to` on h devices that
/// share a starting device. Zero when g == h, when nothing moves, or when
/// either end is a virtual layer.
double activation_transfer(const CompGraph& graph, int from, int to, int g,
                           int h);

/// Same edge when the two layers run on disjoint device sets: every sample
/// moves.
double activation_transfer_disjoint(const CompGraph& graph, int from, int to);

/// Ring all-reduce of the layer's gradients: comm_time(2 * P * (g-1)/g).
/// Zero for g == 1 and for layers without parameters.
double sync_time(const CompGraph& graph, int layer, int g);

/// T * g / comp1.
double amplification(double time_us, int g, double comp1_us);

/// Default candidate set: powers of two not above `total_gpus`.
std::vector<int> power_of_two_candidates(int total_gpus);

struct LayerCost {
  int layer_id = 0;
  int g = 1;
  double comp_us = 0.0;
  double sync_us = 0.0;
  double transfer_in_us = 0.0;  // transfer charged to this layer
  double amp = 0.0;             // 0 for virtual layers
};

/// Cost tables for one (graph, G, candidate set). comp, sync and the
/// redistribution volumes are computed once per candidate index.
class CostContext {
 public:
  CostContext(const CompGraph& graph, int total_gpus,
              std::vector<int> candidates = {},
              Interpolation mode = Interpolation::kLinear);

  const CompGraph& graph() const { return *graph_; }
  const NetworkProfile& network() const { return graph_->network(); }
  int total_gpus() const { return total_gpus_; }
  const std::vector<int>& candidates() const { return candidates_; }
  int num_candidates() const { return static_cast<int>(candidates_.size()); }
  int candidate(int gi) const { return candidates_[gi]; }
  /// Index of g in the candidate list, or -1.
  int candidate_index(int g) const;
  /// Number of candidates not above `cap`.
  int candidates_up_to(int cap) const;
  /// Index of the smallest candidate >= g, or -1.
  int round_up_index(int g) const;

  double comp(int layer, int gi) const { return comp_[layer * stride() + gi]; }
  double comp1(int layer) const { return comp1_[layer]; }
  double sync(int layer, int gi) const { return sync_[layer * stride() + gi]; }
  /// Contiguous-layout edge transfer, see activation_transfer.
  double transfer(int from, int to, int gi, int hi) const;
  /// Disjoint-layout edge transfer, see activation_transfer_disjoint.
  double transfer_disjoint(int from, int to) const;
  /// Amplification of `layer` spending `time_us` on candidate gi; 0 for
  /// virtual layers, which are exempt from the limit.
  double amp(int layer, double time_us, int gi) const;

 private:
  int stride() const { return static_cast<int>(candidates_.size()); }

  const CompGraph* graph_;
  int total_gpus_;
  std::vector<int> candidates_;
  std::vector<double> comp_;
  std::vector<double> comp1_;
  std::vector<double> sync_;
  std::vector<std::int64_t> moved_;  // [gi][hi]
};

}  // namespace burstpar
