// Copyright 2026 The burstpar Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "burstpar/decompose.hpp"

#include <algorithm>
#include <sstream>

#include <nlohmann/json.hpp>

#include "burstpar/error.hpp"

namespace burstpar {

namespace {

class Decomposer {
 public:
  explicit Decomposer(const CompGraph& graph)
      : graph_(graph), visited_(graph.size(), false) {
    compute_post_dominators();
  }

  BlockDecomposition run() {
    BlockDecomposition d;
    parse_series(graph_.source(), -1, d.blocks);
    std::vector<int> missing;
    for (std::size_t i = 0; i < graph_.size(); ++i) {
      if (!visited_[i]) missing.push_back(static_cast<int>(i));
    }
    if (!missing.empty()) fail("layers not reachable as nested blocks", missing);

    auto implied = d.implied_edges();
    std::vector<std::pair<int, int>> actual;
    for (std::size_t u = 0; u < graph_.size(); ++u) {
      for (int v : graph_.succ(static_cast<int>(u))) {
        actual.emplace_back(static_cast<int>(u), v);
      }
    }
    std::sort(implied.begin(), implied.end());
    std::sort(actual.begin(), actual.end());
    if (implied != actual) {
      std::vector<std::pair<int, int>> diff;
      std::set_symmetric_difference(actual.begin(), actual.end(),
                                    implied.begin(), implied.end(),
                                    std::back_inserter(diff));
      std::vector<int> layers;
      for (auto [a, b] : diff) {
        layers.push_back(a);
        layers.push_back(b);
      }
      fail("edges cross branch/join block boundaries", layers);
    }
    return d;
  }

 private:
  [[noreturn]] void fail(const std::string& why, std::vector<int> layers) const {
    std::sort(layers.begin(), layers.end());
    layers.erase(std::unique(layers.begin(), layers.end()), layers.end());
    std::ostringstream os;
    os << "unsupported topology: " << why << " (layers";
    for (int i : layers) os << ' ' << graph_.layer(i).id;
    os << ')';
    throw Error(ErrorKind::kUnsupportedTopology, os.str());
  }

  // Layers are stored topologically, so a post-dominator always has a larger
  // index than the layers it post-dominates.
  void compute_post_dominators() {
    int n = static_cast<int>(graph_.size());
    ipdom_.assign(n, -1);
    for (int v = n - 1; v >= 0; --v) {
      const auto& s = graph_.succ(v);
      if (s.empty()) continue;
      int d = s[0];
      for (std::size_t k = 1; k < s.size(); ++k) d = intersect(d, s[k]);
      ipdom_[v] = d;
    }
  }

  int intersect(int a, int b) const {
    while (a != b && a >= 0 && b >= 0) {
      if (a < b) {
        a = ipdom_[a];
      } else {
        b = ipdom_[b];
      }
    }
    return a == b ? a : -1;
  }

  void parse_series(int start, int stop, Chain& out) {
    int u = start;
    while (u != stop) {
      if (visited_[u]) fail("layer reached twice", {u});
      visited_[u] = true;
      const auto& s = graph_.succ(u);
      if (s.empty()) {
        out.push_back(Block::single(u));
        if (stop >= 0) fail("branch never joins", {u});
        return;
      }
      if (s.size() == 1) {
        out.push_back(Block::single(u));
        int v = s[0];
        if (v != stop && graph_.pred(v).size() != 1) {
          std::vector<int> bad = graph_.pred(v);
          bad.push_back(v);
          fail("join without a matching branching layer", bad);
        }
        u = v;
        continue;
      }
      int join = ipdom_[u];
      if (join < 0) fail("branch has no joining layer", {u});
      Block block{u, join, {}};
      for (int v : s) {
        Chain c;
        if (v != join) {
          if (graph_.pred(v).size() != 1) {
            std::vector<int> bad = graph_.pred(v);
            bad.push_back(v);
            fail("branch chain entered from several layers", bad);
          }
          parse_series(v, join, c);
        }
        block.chains.push_back(std::move(c));
      }
      out.push_back(std::move(block));
      u = join;
    }
  }

  const CompGraph& graph_;
  std::vector<bool> visited_;
  std::vector<int> ipdom_;
};

void count_blocks(const Chain& chain, std::size_t depth, std::size_t& count,
                  std::size_t& max_depth) {
  for (const Block& b : chain) {
    if (!b.is_branch_join()) continue;
    ++count;
    max_depth = std::max(max_depth, depth + 1);
    for (const Chain& c : b.chains) count_blocks(c, depth + 1, count, max_depth);
  }
}

void flatten_into(const Chain& chain, std::vector<int>& out) {
  for (const Block& b : chain) {
    out.push_back(b.layer);
    for (const Chain& c : b.chains) flatten_into(c, out);
  }
}

void edges_of(const Chain& chain, int next, std::vector<std::pair<int, int>>& out) {
  for (std::size_t k = 0; k < chain.size(); ++k) {
    const Block& b = chain[k];
    int after = k + 1 < chain.size() ? chain[k + 1].layer : next;
    if (!b.is_branch_join()) {
      if (after >= 0) out.emplace_back(b.layer, after);
      continue;
    }
    for (const Chain& c : b.chains) {
      if (c.empty()) {
        out.emplace_back(b.layer, b.join);
      } else {
        out.emplace_back(b.layer, c.front().layer);
        edges_of(c, b.join, out);
      }
    }
  }
}

nlohmann::json chain_json(const CompGraph& g, const Chain& chain) {
  nlohmann::json arr = nlohmann::json::array();
  for (const Block& b : chain) {
    if (!b.is_branch_join()) {
      arr.push_back({{"type", "layer"}, {"layer_id", g.layer(b.layer).id}});
      continue;
    }
    nlohmann::json chains = nlohmann::json::array();
    for (const Chain& c : b.chains) chains.push_back(chain_json(g, c));
    arr.push_back({{"type", "branch_join"},
                   {"branch_layer_id", g.layer(b.layer).id},
                   {"join_layer_id", g.layer(b.join).id},
                   {"chains", chains}});
  }
  return arr;
}

void chain_string(const CompGraph& g, const Chain& chain, std::ostream& os) {
  for (std::size_t k = 0; k < chain.size(); ++k) {
    const Block& b = chain[k];
    if (k) os << ' ';
    os << g.layer(b.layer).id;
    if (!b.is_branch_join()) continue;
    os << '<';
    for (std::size_t c = 0; c < b.chains.size(); ++c) {
      if (c) os << " | ";
      if (b.chains[c].empty()) {
        os << '-';
      } else {
        chain_string(g, b.chains[c], os);
      }
    }
    os << '>';
  }
}

}  // namespace

std::size_t BlockDecomposition::branch_join_count() const {
  std::size_t count = 0, depth = 0;
  count_blocks(blocks, 0, count, depth);
  return count;
}

std::size_t BlockDecomposition::max_depth() const {
  std::size_t count = 0, depth = 0;
  count_blocks(blocks, 0, count, depth);
  return depth;
}

std::vector<int> BlockDecomposition::flatten() const {
  std::vector<int> out;
  flatten_into(blocks, out);
  return out;
}

std::vector<std::pair<int, int>> BlockDecomposition::implied_edges() const {
  std::vector<std::pair<int, int>> out;
  edges_of(blocks, -1, out);
  return out;
}

BlockDecomposition decompose(const CompGraph& graph) {
  return Decomposer(graph).run();
}

nlohmann::json decomposition_to_json(const CompGraph& graph,
                                     const BlockDecomposition& d) {
  return chain_json(graph, d.blocks);
}

std::string decomposition_to_string(const CompGraph& graph,
                                    const BlockDecomposition& d) {
  std::ostringstream os;
  chain_string(graph, d.blocks, os);
  return os.str();
}

}  // namespace burstpar
