// Copyright 2026 The burstpar Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

// Reference computations shared by the unit and acceptance tests. They use
// only the free cost functions, never the planner's tables.

#pragma once

#include <limits>
#include <optional>
#include <vector>

#include "burstpar/cost_model.hpp"
#include "burstpar/graph.hpp"

namespace burstpar::testing {

struct ChainOptimum {
  bool found = false;  // some assignment is admissible everywhere
  double time = std::numeric_limits<double>::infinity();
  std::vector<int> g;
};

/// Amplification of chain layer i on g GPUs entered from g_prev GPUs
/// (g_prev = 0 for the first layer).
inline double chain_layer_amp(const CompGraph& graph, int i, int g_prev, int g) {
  double e = g_prev == 0 ? 0.0 : activation_transfer(graph, i - 1, i, g_prev, g);
  double comp = profile_lookup(graph, graph.layer(i).id, g);
  double t = (e + comp) + sync_time(graph, i, g);
  return t * g / profile_lookup(graph, graph.layer(i).id, 1);
}

/// Enumerates every assignment of a pure chain over `cands`; `first_g` pins
/// the first layer.
inline ChainOptimum chain_oracle(const CompGraph& graph, const std::vector<int>& cands,
                                 double amp_limit, std::optional<int> first_g = std::nullopt) {
  const int n = static_cast<int>(graph.size());
  ChainOptimum best;
  std::vector<int> idx(n, 0);
  while (true) {
    double s = 0.0;
    bool ok = !first_g || cands[idx[0]] == *first_g;
    for (int i = 0; i < n && ok; ++i) {
      int g = cands[idx[i]];
      int h = i == 0 ? 0 : cands[idx[i - 1]];
      double e = i == 0 ? 0.0 : activation_transfer(graph, i - 1, i, h, g);
      double comp = profile_lookup(graph, graph.layer(i).id, g);
      double sync = sync_time(graph, i, g);
      if (chain_layer_amp(graph, i, h, g) > amp_limit) ok = false;
      s = ((s + e) + comp) + sync;
    }
    if (ok && s < best.time) {
      best.found = true;
      best.time = s;
      best.g.clear();
      for (int i = 0; i < n; ++i) best.g.push_back(cands[idx[i]]);
    }
    int j = 0;
    while (j < n && ++idx[j] == static_cast<int>(cands.size())) idx[j++] = 0;
    if (j == n) break;
  }
  return best;
}

}  // namespace burstpar::testing
