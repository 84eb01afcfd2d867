// Copyright 2026 The burstpar Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "burstpar/graph.hpp"

namespace burstpar {

struct Block;
using Chain = std::vector<Block>;

/// One element of a reduced chain. A single layer, or a branch/join block
/// that owns its branching layer and every layer on its parallel chains. The
/// joining layer is owned by whatever follows the block, so the branch/join
/// region becomes one edge between two consecutive stations.
///
/// All layer references are dense graph indices.
struct Block {
  int layer = -1;  // the single layer, or the branching layer
  int join = -1;   // -1 for a single layer
  std::vector<Chain> chains;  // empty chain == direct branch->join edge

  bool is_branch_join() const { return join >= 0; }

  static Block single(int layer) { return Block{layer, -1, {}}; }
};

struct BlockDecomposition {
  Chain blocks;  // top-level chain from source to sink

  std::size_t top_level_size() const { return blocks.size(); }
  /// Number of branch/join blocks at every nesting level.
  std::size_t branch_join_count() const;
  std::size_t max_depth() const;
  /// Layers in block order; each graph layer appears exactly once.
  std::vector<int> flatten() const;
  /// Graph edges implied by the block structure, as (from, to) indices.
  std::vector<std::pair<int, int>> implied_edges() const;
};

/// Reduces the graph into a chain of single layers and (nested) branch/join
/// blocks, innermost first. Throws kUnsupportedTopology naming the offending
/// layers when the graph is not built from properly nested branch/join
/// regions.
BlockDecomposition decompose(const CompGraph& graph);

/// Nested JSON description using layer ids.
nlohmann::json decomposition_to_json(const CompGraph& graph,
                                     const BlockDecomposition& d);

/// Compact one-line form, e.g. "0 1<2 3 | -> 4" (layer ids; "-" is a
/// direct branch->join edge).
std::string decomposition_to_string(const CompGraph& graph,
                                    const BlockDecomposition& d);

}  // namespace burstpar
