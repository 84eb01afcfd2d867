// Copyright 2026 The burstpar Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "burstpar/cost_model.hpp"

#include <algorithm>
#include <string>

#include "burstpar/error.hpp"

namespace burstpar {

double comm_time(double payload_bytes, const NetworkProfile& network) {
  return payload_bytes / network.bandwidth_bytes_per_sec * 1e6 +
         network.propagation_delay_us;
}

std::int64_t moved_samples(int global_batch, int g, int h) {
  if (g == h) return 0;
  const std::int64_t b = global_batch;
  const std::int64_t cg = per_device_batch(global_batch, g);
  const std::int64_t ch = per_device_batch(global_batch, h);
  std::int64_t stay = 0;
  for (std::int64_t d = 0; d < std::min(g, h); ++d) {
    std::int64_t lo = std::max(d * cg, d * ch);
    std::int64_t hi = std::min({(d + 1) * cg, (d + 1) * ch, b});
    if (hi > lo) stay += hi - lo;
  }
  return b - stay;
}

namespace {

double transfer_bytes(const CompGraph& graph, int from, int to,
                      std::int64_t samples) {
  const Layer& src = graph.layer(from);
  if (src.is_virtual() || graph.layer(to).is_virtual()) return 0.0;
  double bytes = static_cast<double>(samples) *
                 static_cast<double>(src.activation_bytes_per_sample);
  if (bytes <= 0.0) return 0.0;
  return 2.0 * comm_time(bytes, graph.network());
}

}  // namespace

double activation_transfer(const CompGraph& graph, int from, int to, int g,
                           int h) {
  if (g == h) return 0.0;
  return transfer_bytes(graph, from, to,
                        moved_samples(graph.global_batch(), g, h));
}

double activation_transfer_disjoint(const CompGraph& graph, int from, int to) {
  return transfer_bytes(graph, from, to, graph.global_batch());
}

double sync_time(const CompGraph& graph, int layer, int g) {
  const Layer& l = graph.layer(layer);
  if (g <= 1 || l.params_bytes <= 0) return 0.0;
  double payload = 2.0 * static_cast<double>(l.params_bytes) * (g - 1) / g;
  return comm_time(payload, graph.network());
}

double amplification(double time_us, int g, double comp1_us) {
  if (!(comp1_us > 0.0)) {
    throw Error(ErrorKind::kValidation,
                "amplification needs a positive single-device time");
  }
  return time_us * g / comp1_us;
}

std::vector<int> power_of_two_candidates(int total_gpus) {
  std::vector<int> out;
  for (int g = 1; g > 0 && g <= total_gpus; g *= 2) out.push_back(g);
  return out;
}

CostContext::CostContext(const CompGraph& graph, int total_gpus,
                         std::vector<int> candidates, Interpolation mode)
    : graph_(&graph), total_gpus_(total_gpus), candidates_(std::move(candidates)) {
  if (total_gpus < 1) {
    throw Error(ErrorKind::kValidation, "total GPU count must be at least 1");
  }
  if (candidates_.empty()) candidates_ = power_of_two_candidates(total_gpus);
  if (!std::is_sorted(candidates_.begin(), candidates_.end()) ||
      std::adjacent_find(candidates_.begin(), candidates_.end()) !=
          candidates_.end()) {
    throw Error(ErrorKind::kValidation,
                "candidate GPU counts must be strictly increasing");
  }
  if (candidates_.front() != 1) {
    throw Error(ErrorKind::kValidation, "candidate GPU counts must contain 1");
  }
  if (candidates_.back() > total_gpus) {
    throw Error(ErrorKind::kValidation,
                "candidate GPU count " + std::to_string(candidates_.back()) +
                    " exceeds the " + std::to_string(total_gpus) +
                    " available GPUs");
  }

  const int n = static_cast<int>(graph.size());
  const int c = stride();
  comp_.resize(static_cast<std::size_t>(n) * c);
  sync_.resize(static_cast<std::size_t>(n) * c);
  comp1_.resize(n);
  for (int i = 0; i < n; ++i) {
    int id = graph.layer(i).id;
    for (int gi = 0; gi < c; ++gi) {
      comp_[i * c + gi] = profile_lookup(graph, id, candidates_[gi], mode);
      sync_[i * c + gi] = sync_time(graph, i, candidates_[gi]);
    }
    comp1_[i] = comp_[i * c];
  }
  moved_.resize(static_cast<std::size_t>(c) * c);
  for (int gi = 0; gi < c; ++gi) {
    for (int hi = 0; hi < c; ++hi) {
      moved_[gi * c + hi] =
          moved_samples(graph.global_batch(), candidates_[gi], candidates_[hi]);
    }
  }
}

int CostContext::candidate_index(int g) const {
  auto it = std::lower_bound(candidates_.begin(), candidates_.end(), g);
  if (it == candidates_.end() || *it != g) return -1;
  return static_cast<int>(it - candidates_.begin());
}

int CostContext::candidates_up_to(int cap) const {
  return static_cast<int>(
      std::upper_bound(candidates_.begin(), candidates_.end(), cap) -
      candidates_.begin());
}

int CostContext::round_up_index(int g) const {
  auto it = std::lower_bound(candidates_.begin(), candidates_.end(), g);
  if (it == candidates_.end()) return -1;
  return static_cast<int>(it - candidates_.begin());
}

double CostContext::transfer(int from, int to, int gi, int hi) const {
  if (gi == hi) return 0.0;
  return transfer_bytes(*graph_, from, to, moved_[gi * stride() + hi]);
}

double CostContext::transfer_disjoint(int from, int to) const {
  return transfer_bytes(*graph_, from, to, graph_->global_batch());
}

double CostContext::amp(int layer, double time_us, int gi) const {
  if (graph_->layer(layer).is_virtual()) return 0.0;
  return time_us * candidates_[gi] / comp1_[layer];
}

}  // namespace burstpar
