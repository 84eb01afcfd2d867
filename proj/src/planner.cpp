// Copyright 2026 The burstpar Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "burstpar/planner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <tuple>

#include <nlohmann/json.hpp>

#include "burstpar/error.hpp"
#include "json_io.hpp"

namespace burstpar {

using json = nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_amp_limit(double amp_limit) {
  if (std::isnan(amp_limit) || amp_limit < 1.0) {
    throw Error(ErrorKind::kInfeasible,
                "amp_limit below 1 admits no plan: even a single GPU has "
                "amplification 1");
  }
}

// Where the first station of a chain gets its input from.
struct Entry {
  int from = -1;  // -1: start row, nothing to transfer
  int from_gi = 0;
  bool disjoint = false;
  int only_gi = -1;  // pin the first station's column
};

struct ChainDp {
  int nc = 0;
  std::vector<std::vector<double>> S;
  std::vector<std::vector<double>> T;
  std::vector<std::vector<double>> charged;
  std::vector<std::vector<int>> choice;
  std::vector<std::vector<int>> viol;
  std::vector<std::vector<char>> fallback;
};

struct Decision {
  std::uint32_t mask = 0;  // concurrent chains
  int serial_ci = -1;      // -1: serial chains get the whole budget
  std::vector<int> caps_ci;
};

struct BlockTable {
  int ncb = 0;  // branch columns
  int nch = 0;  // join columns
  std::vector<double> value;  // [gb * nch + h]
  std::vector<Decision> decision;
};

struct Recorder {
  std::vector<int> g_index;
  std::vector<int> offset;
  std::vector<LayerCost> cost;
  std::vector<char> fallback;
  std::vector<BlockChoice> blocks;
};

class Planner {
 public:
  Planner(const CostContext& ctx, double amp_limit, bool concurrency)
      : ctx_(ctx), limit_(amp_limit), concurrency_(concurrency) {}

  ChainDp run_chain(const Chain& chain, const Entry& entry, int cap,
                    bool strict) {
    ChainDp dp;
    const int nc = ctx_.candidates_up_to(cap);
    const int n = static_cast<int>(chain.size());
    dp.nc = nc;
    dp.S.assign(n, std::vector<double>(nc, kInf));
    dp.T.assign(n, std::vector<double>(nc, kInf));
    dp.charged.assign(n, std::vector<double>(nc, 0.0));
    dp.choice.assign(n, std::vector<int>(nc, -1));
    dp.viol.assign(n, std::vector<int>(nc, 0));
    dp.fallback.assign(n, std::vector<char>(nc, 0));

    for (int k = 0; k < n; ++k) {
      const int l = chain[k].layer;
      for (int gi = 0; gi < nc; ++gi) {
        if (k == 0 && entry.only_gi >= 0 && gi != entry.only_gi) continue;
        const double comp = ctx_.comp(l, gi);
        const double sync = ctx_.sync(l, gi);
        if (strict && ctx_.amp(l, (0.0 + comp) + sync, gi) > limit_) continue;

        bool have_ok = false, have_any = false;
        double ok_s = kInf, any_s = kInf, any_amp = kInf;
        int ok_v = 0, ok_h = -1, any_v = 0, any_h = -1;
        double ok_c = 0.0, any_c = 0.0;
        const auto consider = [&](double s_prev, int v_prev, int hi, double e,
                                  bool is_charged) {
          const double c = is_charged ? e : 0.0;
          const double t = (c + comp) + sync;
          const double a = ctx_.amp(l, t, gi);
          const double s = ((s_prev + e) + comp) + sync;
          if (a <= limit_) {
            if (!have_ok || std::tie(v_prev, s) < std::tie(ok_v, ok_s)) {
              have_ok = true;
              ok_s = s, ok_v = v_prev, ok_h = hi, ok_c = c;
            }
          } else if (!strict) {
            if (!have_any ||
                std::tie(a, v_prev, s) < std::tie(any_amp, any_v, any_s)) {
              have_any = true;
              any_amp = a, any_s = s, any_v = v_prev, any_h = hi, any_c = c;
            }
          }
        };

        if (k == 0) {
          double e = 0.0;
          if (entry.from >= 0) {
            e = entry.disjoint ? ctx_.transfer_disjoint(entry.from, l)
                               : ctx_.transfer(entry.from, l, entry.from_gi, gi);
          }
          consider(0.0, 0, -1, e, true);
        } else {
          const Block& prev = chain[k - 1];
          const BlockTable* table =
              prev.is_branch_join() ? &block_table(prev, cap, cap) : nullptr;
          for (int hi = 0; hi < nc; ++hi) {
            const double s_prev = dp.S[k - 1][hi];
            if (s_prev == kInf) continue;
            if (table) {
              const double e = table->value[hi * table->nch + gi];
              if (e == kInf) continue;
              consider(s_prev, dp.viol[k - 1][hi], hi, e, false);
            } else {
              consider(s_prev, dp.viol[k - 1][hi], hi,
                       ctx_.transfer(prev.layer, l, hi, gi), true);
            }
          }
        }

        if (have_ok) {
          dp.S[k][gi] = ok_s;
          dp.T[k][gi] = (ok_c + comp) + sync;
          dp.charged[k][gi] = ok_c;
          dp.choice[k][gi] = ok_h;
          dp.viol[k][gi] = ok_v;
        } else if (have_any) {
          dp.S[k][gi] = any_s;
          dp.T[k][gi] = (any_c + comp) + sync;
          dp.charged[k][gi] = any_c;
          dp.choice[k][gi] = any_h;
          dp.viol[k][gi] = any_v + 1;
          dp.fallback[k][gi] = 1;
        }
      }
    }
    return dp;
  }

  // Best way to leave a finished chain into `join` at column h. Returns the
  // time including the exit edge and the last station's column.
  std::pair<double, int> chain_exit(const ChainDp& dp, const Chain& chain,
                                    int join, bool disjoint, int cap, int hcap,
                                    int h) {
    const int k = static_cast<int>(chain.size()) - 1;
    const Block& last = chain[k];
    const BlockTable* table =
        last.is_branch_join() ? &block_table(last, cap, hcap) : nullptr;
    double best = kInf;
    int arg = -1;
    for (int gi = 0; gi < dp.nc; ++gi) {
      const double s = dp.S[k][gi];
      if (s == kInf) continue;
      double e;
      if (table) {
        e = table->value[gi * table->nch + h];
      } else if (disjoint) {
        e = ctx_.transfer_disjoint(last.layer, join);
      } else {
        e = ctx_.transfer(last.layer, join, gi, h);
      }
      const double v = s + e;
      if (v < best) best = v, arg = gi;
    }
    return {best, arg};
  }

  const BlockTable& block_table(const Block& b, int budget, int hcap) {
    auto key = std::make_tuple(&b, budget, hcap);
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    BlockTable t = compute_block(b, budget, hcap);
    return memo_.emplace(key, std::move(t)).first->second;
  }

  void assign_chain(const Chain& chain, const ChainDp& dp, int last_gi,
                    int cap, int hcap, int base, int exit_h, Recorder& rec) {
    const int n = static_cast<int>(chain.size());
    std::vector<int> cols(n);
    cols[n - 1] = last_gi;
    for (int k = n - 1; k > 0; --k) cols[k - 1] = dp.choice[k][cols[k]];
    for (int k = 0; k < n; ++k) {
      const Block& st = chain[k];
      const int l = st.layer, gi = cols[k];
      rec.g_index[l] = gi;
      rec.offset[l] = base;
      LayerCost& c = rec.cost[l];
      c.layer_id = ctx_.graph().layer(l).id;
      c.g = ctx_.candidate(gi);
      c.comp_us = ctx_.comp(l, gi);
      c.sync_us = ctx_.sync(l, gi);
      c.transfer_in_us = dp.charged[k][gi];
      c.amp = ctx_.amp(l, dp.T[k][gi], gi);
      rec.fallback[l] = dp.fallback[k][gi];
      if (st.is_branch_join()) {
        if (k + 1 < n) {
          assign_block(st, cap, cap, gi, cols[k + 1], base, rec);
        } else {
          assign_block(st, cap, hcap, gi, exit_h, base, rec);
        }
      }
    }
  }

  void assign_block(const Block& b, int budget, int hcap, int gb, int h,
                    int base, Recorder& rec) {
    const BlockTable& table = block_table(b, budget, hcap);
    const Decision d = table.decision[gb * table.nch + h];
    const int serial_cap = d.serial_ci < 0 ? budget : ctx_.candidate(d.serial_ci);

    BlockChoice choice;
    choice.branch_layer_id = ctx_.graph().layer(b.layer).id;
    choice.join_layer_id = ctx_.graph().layer(b.join).id;
    choice.branch_g = ctx_.candidate(gb);
    choice.join_g = ctx_.candidate(h);
    choice.serial_cap = serial_cap;
    choice.time_us = table.value[gb * table.nch + h];

    int next_offset = base + serial_cap;
    std::size_t j = 0;
    for (std::size_t c = 0; c < b.chains.size(); ++c) {
      const bool concurrent = (d.mask >> c) & 1u;
      int cap = serial_cap, off = base;
      if (concurrent) {
        cap = ctx_.candidate(d.caps_ci[j++]);
        off = next_offset;
        next_offset += cap;
        choice.concurrent_chains.push_back(static_cast<int>(c));
        choice.chain_caps.push_back(cap);
      }
      const Chain& chain = b.chains[c];
      if (chain.empty()) continue;
      ChainDp dp = run_chain(chain, Entry{b.layer, gb, concurrent, -1}, cap, true);
      auto [v, last] = chain_exit(dp, chain, b.join, concurrent, cap, hcap, h);
      (void)v;
      assign_chain(chain, dp, last, cap, hcap, off, h, rec);
    }
    rec.blocks.push_back(std::move(choice));
  }

 private:
  std::vector<double> exits(const Chain& chain, const Block& b, int gb,
                            bool disjoint, int cap, int hcap, int nch) {
    std::vector<double> out(nch, kInf);
    if (chain.empty()) {
      for (int h = 0; h < nch; ++h) out[h] = ctx_.transfer(b.layer, b.join, gb, h);
      return out;
    }
    ChainDp dp = run_chain(chain, Entry{b.layer, gb, disjoint, -1}, cap, true);
    for (int h = 0; h < nch; ++h) {
      out[h] = chain_exit(dp, chain, b.join, disjoint, cap, hcap, h).first;
    }
    return out;
  }

  BlockTable compute_block(const Block& b, int budget, int hcap) {
    BlockTable t;
    t.ncb = ctx_.candidates_up_to(budget);
    t.nch = ctx_.candidates_up_to(hcap);
    t.value.assign(static_cast<std::size_t>(t.ncb) * t.nch, kInf);
    t.decision.assign(static_cast<std::size_t>(t.ncb) * t.nch, Decision{});

    const int k = static_cast<int>(b.chains.size());
    std::vector<char> eligible(k, 0);
    bool any_eligible = false;
    if (concurrency_ && k >= 2 && k < 32) {
      for (int c = 0; c < k; ++c) {
        const Chain& ch = b.chains[c];
        eligible[c] = !ch.empty() && !ch.back().is_branch_join();
        any_eligible = any_eligible || eligible[c];
      }
    }
    const int ncap = t.ncb;  // candidate caps for split groups

    for (int gb = 0; gb < t.ncb; ++gb) {
      std::vector<std::vector<double>> full(k);
      for (int c = 0; c < k; ++c) {
        full[c] = exits(b.chains[c], b, gb, false, budget, hcap, t.nch);
      }
      // serial[c][m][h], para[c][m][h] at candidate caps.
      std::vector<std::vector<std::vector<double>>> serial, para;
      if (any_eligible) {
        serial.assign(k, {});
        para.assign(k, {});
        for (int c = 0; c < k; ++c) {
          for (int m = 0; m < ncap; ++m) {
            const int cap = ctx_.candidate(m);
            if (cap == budget) {
              serial[c].push_back(full[c]);
            } else {
              serial[c].push_back(exits(b.chains[c], b, gb, false, cap, hcap, t.nch));
            }
            if (eligible[c]) {
              para[c].push_back(exits(b.chains[c], b, gb, true, cap, hcap, t.nch));
            }
          }
        }
      }

      for (int h = 0; h < t.nch; ++h) {
        double best = 0.0;
        for (int c = 0; c < k; ++c) best = best + full[c][h];
        Decision best_d;
        if (any_eligible) {
          const std::uint32_t all = (k >= 32) ? 0 : ((1u << k) - 1u);
          for (std::uint32_t mask = 1; mask < all; ++mask) {
            bool ok = true;
            for (int c = 0; c < k && ok; ++c) {
              if (((mask >> c) & 1u) && !eligible[c]) ok = false;
            }
            if (!ok) continue;
            Decision d;
            double v = merge(mask, h, k, budget, serial, para, d);
            if (v < best) {
              best = v;
              best_d = std::move(d);
            }
          }
        }
        t.value[gb * t.nch + h] = best;
        t.decision[gb * t.nch + h] = std::move(best_d);
      }
    }
    return t;
  }

  // min over caps of max(serial group time, concurrent chain times) subject
  // to the caps fitting in the budget.
  double merge(std::uint32_t mask, int h, int k, int budget,
               const std::vector<std::vector<std::vector<double>>>& serial,
               const std::vector<std::vector<std::vector<double>>>& para,
               Decision& d) {
    const int ncap = static_cast<int>(serial[0].size());
    std::vector<double> fs(ncap, 0.0);
    for (int m = 0; m < ncap; ++m) {
      double s = 0.0;
      for (int c = 0; c < k; ++c) {
        if (!((mask >> c) & 1u)) s = s + serial[c][m][h];
      }
      fs[m] = s;
    }
    std::vector<double> taus;
    for (double v : fs) {
      if (v != kInf) taus.push_back(v);
    }
    for (int c = 0; c < k; ++c) {
      if (!((mask >> c) & 1u)) continue;
      for (int m = 0; m < ncap; ++m) {
        if (para[c][m][h] != kInf) taus.push_back(para[c][m][h]);
      }
    }
    std::sort(taus.begin(), taus.end());
    taus.erase(std::unique(taus.begin(), taus.end()), taus.end());

    const auto first_within = [&](const auto& f, double tau) {
      for (int m = 0; m < ncap; ++m) {
        if (f(m) <= tau) return m;
      }
      return -1;
    };
    for (double tau : taus) {
      int ms = first_within([&](int m) { return fs[m]; }, tau);
      if (ms < 0) continue;
      long need = ctx_.candidate(ms);
      double value = fs[ms];
      std::vector<int> caps;
      bool ok = true;
      for (int c = 0; c < k && ok; ++c) {
        if (!((mask >> c) & 1u)) continue;
        int mc = first_within([&](int m) { return para[c][m][h]; }, tau);
        if (mc < 0) {
          ok = false;
          break;
        }
        need += ctx_.candidate(mc);
        value = std::max(value, para[c][mc][h]);
        caps.push_back(mc);
      }
      if (!ok || need > budget) continue;
      d.mask = mask;
      d.serial_ci = ms;
      d.caps_ci = std::move(caps);
      return value;
    }
    return kInf;
  }

  const CostContext& ctx_;
  double limit_;
  bool concurrency_;
  std::map<std::tuple<const Block*, int, int>, BlockTable> memo_;
};

Chain singles(const std::vector<int>& layers) {
  Chain c;
  for (int l : layers) c.push_back(Block::single(l));
  return c;
}

TrainingPlan finish(const CostContext& ctx, double amp_limit, double total,
                    Recorder& rec) {
  const CompGraph& g = ctx.graph();
  TrainingPlan plan;
  plan.total_gpus = ctx.total_gpus();
  plan.amp_limit = amp_limit;
  plan.predicted_iteration_us = total;
  for (std::size_t i = 0; i < g.size(); ++i) {
    plan.assignments.push_back(
        {g.layer(static_cast<int>(i)).id, ctx.candidate(rec.g_index[i]), rec.offset[i]});
    plan.costs.push_back(rec.cost[i]);
    if (rec.fallback[i]) plan.fallback_layers.push_back(g.layer(static_cast<int>(i)).id);
  }
  std::sort(rec.blocks.begin(), rec.blocks.end(),
            [&](const BlockChoice& a, const BlockChoice& b) {
              return g.index_of(a.branch_layer_id) < g.index_of(b.branch_layer_id);
            });
  plan.blocks = std::move(rec.blocks);
  return plan;
}

Recorder make_recorder(std::size_t n) {
  Recorder rec;
  rec.g_index.assign(n, 0);
  rec.offset.assign(n, 0);
  rec.cost.assign(n, LayerCost{});
  rec.fallback.assign(n, 0);
  return rec;
}

int pick_final(const ChainDp& dp) {
  const int k = static_cast<int>(dp.S.size()) - 1;
  int best = -1;
  for (int gi = 0; gi < dp.nc; ++gi) {
    if (dp.S[k][gi] == kInf) continue;
    if (best < 0 || std::tie(dp.viol[k][gi], dp.S[k][gi]) <
                        std::tie(dp.viol[k][best], dp.S[k][best])) {
      best = gi;
    }
  }
  return best;
}

}  // namespace

int TrainingPlan::g_of(int layer_id) const { return assignment_of(layer_id).g; }

const Assignment& TrainingPlan::assignment_of(int layer_id) const {
  for (const Assignment& a : assignments) {
    if (a.layer_id == layer_id) return a;
  }
  throw Error(ErrorKind::kValidation,
              "plan has no assignment for layer " + std::to_string(layer_id));
}

PlanTables search_linear(const std::vector<int>& chain, const CostContext& ctx,
                         double amp_limit, std::optional<int> entry_g) {
  check_amp_limit(amp_limit);
  if (chain.empty()) throw Error(ErrorKind::kValidation, "empty chain");
  Entry entry;
  if (entry_g) {
    entry.only_gi = ctx.candidate_index(*entry_g);
    if (entry.only_gi < 0) {
      throw Error(ErrorKind::kValidation,
                  "entry GPU count " + std::to_string(*entry_g) +
                      " is not a candidate");
    }
  }
  Planner planner(ctx, amp_limit, false);
  ChainDp dp = planner.run_chain(singles(chain), entry, ctx.total_gpus(), false);

  PlanTables t;
  t.layers = chain;
  t.candidates = ctx.candidates();
  t.amp_limit = amp_limit;
  const int c = ctx.num_candidates();
  t.S.assign(1, std::vector<double>(c, 0.0));
  t.T.assign(1, std::vector<double>(c, 0.0));
  t.choice.assign(1, std::vector<int>(c, -1));
  t.violations.assign(1, std::vector<int>(c, 0));
  t.fallback.assign(1, std::vector<bool>(c, false));
  for (std::size_t k = 0; k < chain.size(); ++k) {
    t.S.push_back(dp.S[k]);
    t.T.push_back(dp.T[k]);
    std::vector<int> ch(c, -1);
    std::vector<bool> fb(c, false);
    for (int gi = 0; gi < c; ++gi) {
      if (dp.S[k][gi] == kInf) continue;
      if (dp.choice[k][gi] >= 0) ch[gi] = ctx.candidate(dp.choice[k][gi]);
      fb[gi] = dp.fallback[k][gi];
    }
    t.choice.push_back(std::move(ch));
    t.violations.push_back(dp.viol[k]);
    t.fallback.push_back(std::move(fb));
  }
  return t;
}

TrainingPlan backtrace(const PlanTables& tables, const CostContext& ctx) {
  const int rows = static_cast<int>(tables.S.size());
  if (rows < 2) throw Error(ErrorKind::kValidation, "tables are empty");
  const int c = static_cast<int>(tables.candidates.size());
  int best = -1;
  for (int gi = 0; gi < c; ++gi) {
    if (tables.S[rows - 1][gi] == kInf) continue;
    if (best < 0 ||
        std::tie(tables.violations[rows - 1][gi], tables.S[rows - 1][gi]) <
            std::tie(tables.violations[rows - 1][best], tables.S[rows - 1][best])) {
      best = gi;
    }
  }
  if (best < 0) throw Error(ErrorKind::kInfeasible, "no reachable final state");

  const CompGraph& graph = ctx.graph();
  std::vector<int> cols(rows - 1);
  cols[rows - 2] = best;
  for (int r = rows - 1; r > 1; --r) {
    cols[r - 2] = ctx.candidate_index(tables.choice[r][cols[r - 1]]);
  }
  TrainingPlan plan;
  plan.total_gpus = ctx.total_gpus();
  plan.amp_limit = tables.amp_limit;
  plan.predicted_iteration_us = tables.S[rows - 1][best];
  for (int r = 1; r < rows; ++r) {
    const int l = tables.layers[r - 1], gi = cols[r - 1];
    LayerCost cost;
    cost.layer_id = graph.layer(l).id;
    cost.g = ctx.candidate(gi);
    cost.comp_us = ctx.comp(l, gi);
    cost.sync_us = ctx.sync(l, gi);
    cost.transfer_in_us =
        r == 1 ? 0.0 : ctx.transfer(tables.layers[r - 2], l, cols[r - 2], gi);
    cost.amp = ctx.amp(l, tables.T[r][gi], gi);
    plan.assignments.push_back({cost.layer_id, cost.g, 0});
    plan.costs.push_back(cost);
    if (tables.fallback[r][gi]) plan.fallback_layers.push_back(cost.layer_id);
  }
  return plan;
}

TrainingPlan reduce_multichain(const CompGraph& graph, const CostContext& ctx,
                               double amp_limit, const PlannerOptions& options) {
  check_amp_limit(amp_limit);
  if (&ctx.graph() != &graph) {
    throw Error(ErrorKind::kValidation, "cost context belongs to another graph");
  }
  BlockDecomposition d = decompose(graph);
  Planner planner(ctx, amp_limit, options.allow_concurrency);
  const int G = ctx.total_gpus();
  ChainDp dp = planner.run_chain(d.blocks, Entry{}, G, false);
  const int last = pick_final(dp);
  if (last < 0) throw Error(ErrorKind::kInfeasible, "no plan fits the cluster");
  Recorder rec = make_recorder(graph.size());
  planner.assign_chain(d.blocks, dp, last, G, G, 0, -1, rec);
  return finish(ctx, amp_limit, dp.S.back()[last], rec);
}

double transition_time(const CostContext& ctx, const Block& block, int g,
                       int to, int h, double amp_limit,
                       const PlannerOptions& options) {
  check_amp_limit(amp_limit);
  const int gi = ctx.candidate_index(g), hi = ctx.candidate_index(h);
  if (gi < 0 || hi < 0) {
    throw Error(ErrorKind::kValidation, "GPU count is not a candidate");
  }
  if (!block.is_branch_join()) return ctx.transfer(block.layer, to, gi, hi);
  if (block.join != to) {
    throw Error(ErrorKind::kValidation, "block does not join into that layer");
  }
  Planner planner(ctx, amp_limit, options.allow_concurrency);
  const int G = ctx.total_gpus();
  return planner.block_table(block, G, G).value[gi * ctx.candidates_up_to(G) + hi];
}

TrainingPlan plan(const CompGraph& graph, int total_gpus, double amp_limit,
                  int global_batch, const PlannerOptions& options) {
  check_amp_limit(amp_limit);
  const auto start = std::chrono::steady_clock::now();
  std::optional<CompGraph> rebatched;
  const CompGraph* g = &graph;
  if (global_batch > 0 && global_batch != graph.global_batch()) {
    rebatched = with_global_batch(graph, global_batch);
    g = &*rebatched;
  }
  CostContext ctx(*g, total_gpus, options.candidates, options.interpolation);
  TrainingPlan p = reduce_multichain(*g, ctx, amp_limit, options);
  p.search_wall_s = std::chrono::duration<double>(
                        std::chrono::steady_clock::now() - start)
                        .count();
  return p;
}

// ---------------------------------------------------------------------------
// Exhaustive oracle.

namespace {

struct Outcome {
  double time = 0.0;
  int req = 0;  // devices needed, before rounding
  bool ok = true;
};

class Evaluator {
 public:
  Evaluator(const CostContext& ctx, double limit, const std::vector<int>& gi,
            const std::map<const Block*, int>& block_index,
            const std::vector<std::uint32_t>& masks)
      : ctx_(ctx), limit_(limit), gi_(gi), index_(block_index), masks_(masks) {}

  std::vector<LayerCost>* record = nullptr;

  // Folds a chain; `from` < 0 means the start row, `join` < 0 no exit.
  Outcome chain(const Chain& ch, int from, int from_gi, bool disjoint,
                int join, int join_gi) {
    Outcome out;
    double s = 0.0;
    for (std::size_t k = 0; k < ch.size(); ++k) {
      const int l = ch[k].layer, g = gi_[l];
      double e = 0.0, charged = 0.0;
      if (k == 0) {
        if (from >= 0) {
          e = disjoint ? ctx_.transfer_disjoint(from, l)
                       : ctx_.transfer(from, l, from_gi, g);
        }
        charged = e;
      } else if (ch[k - 1].is_branch_join()) {
        Outcome b = block(ch[k - 1], gi_[ch[k - 1].layer], g);
        if (!b.ok) return fail();
        out.req = std::max(out.req, b.req);
        e = b.time;
      } else {
        e = ctx_.transfer(ch[k - 1].layer, l, gi_[ch[k - 1].layer], g);
        charged = e;
      }
      const double comp = ctx_.comp(l, g), sync = ctx_.sync(l, g);
      const double t = (charged + comp) + sync;
      const double amp = ctx_.amp(l, t, g);
      if (amp > limit_) return fail();
      s = ((s + e) + comp) + sync;
      out.req = std::max(out.req, ctx_.candidate(g));
      if (record) {
        (*record)[l] = LayerCost{ctx_.graph().layer(l).id, ctx_.candidate(g),
                                 comp, sync, charged, amp};
      }
    }
    if (join >= 0) {
      const Block& last = ch.back();
      double e;
      if (last.is_branch_join()) {
        Outcome b = block(last, gi_[last.layer], join_gi);
        if (!b.ok) return fail();
        out.req = std::max(out.req, b.req);
        e = b.time;
      } else if (disjoint) {
        e = ctx_.transfer_disjoint(last.layer, join);
      } else {
        e = ctx_.transfer(last.layer, join, gi_[last.layer], join_gi);
      }
      s = s + e;
    }
    out.time = s;
    return out;
  }

  Outcome block(const Block& b, int gb, int h) {
    const std::uint32_t mask = masks_[index_.at(&b)];
    Outcome out;
    double serial = 0.0, para = 0.0;
    int serial_req = 0, para_req = 0;
    for (std::size_t c = 0; c < b.chains.size(); ++c) {
      const bool concurrent = (mask >> c) & 1u;
      const Chain& ch = b.chains[c];
      Outcome r;
      if (ch.empty()) {
        r.time = ctx_.transfer(b.layer, b.join, gb, h);
      } else {
        r = chain(ch, b.layer, gb, concurrent, b.join, h);
        if (!r.ok) return fail();
      }
      if (concurrent) {
        const int up = ctx_.round_up_index(r.req);
        if (up < 0) return fail();
        para_req += ctx_.candidate(up);
        para = std::max(para, r.time);
      } else {
        serial = serial + r.time;
        serial_req = std::max(serial_req, r.req);
      }
    }
    if (mask == 0) {
      out.time = serial;
      out.req = serial_req;
      return out;
    }
    const int up = ctx_.round_up_index(serial_req);
    if (up < 0) return fail();
    out.req = ctx_.candidate(up) + para_req;
    out.time = std::max(serial, para);
    return out;
  }

 private:
  static Outcome fail() {
    Outcome o;
    o.ok = false;
    return o;
  }

  const CostContext& ctx_;
  double limit_;
  const std::vector<int>& gi_;
  const std::map<const Block*, int>& index_;
  const std::vector<std::uint32_t>& masks_;
};

void collect_blocks(const Chain& chain, std::vector<const Block*>& out) {
  for (const Block& b : chain) {
    if (!b.is_branch_join()) continue;
    out.push_back(&b);
    for (const Chain& c : b.chains) collect_blocks(c, out);
  }
}

}  // namespace

TrainingPlan brute_force_plan(const CompGraph& graph, int total_gpus,
                              double amp_limit, const PlannerOptions& options) {
  check_amp_limit(amp_limit);
  CostContext ctx(graph, total_gpus, options.candidates, options.interpolation);
  const int n = static_cast<int>(graph.size());
  const int c = ctx.num_candidates();
  if (n > 10) {
    throw Error(ErrorKind::kValidation,
                "instance too large for exhaustive search: more than 10 layers");
  }
  double combos = std::pow(static_cast<double>(c), n);
  if (combos > 1e6) {
    throw Error(ErrorKind::kValidation,
                "instance too large for exhaustive search: more than 10^6 "
                "assignments");
  }

  BlockDecomposition d = decompose(graph);
  std::vector<const Block*> blocks;
  collect_blocks(d.blocks, blocks);
  std::map<const Block*, int> index;
  std::vector<std::vector<std::uint32_t>> mask_options(blocks.size());
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const Block& b = *blocks[i];
    index[&b] = static_cast<int>(i);
    mask_options[i].push_back(0);
    const int k = static_cast<int>(b.chains.size());
    if (!options.allow_concurrency || k < 2 || k > 16) continue;
    for (std::uint32_t mask = 1; mask + 1 < (1u << k); ++mask) {
      bool ok = true;
      for (int ci = 0; ci < k; ++ci) {
        if (!((mask >> ci) & 1u)) continue;
        const Chain& ch = b.chains[ci];
        if (ch.empty() || ch.back().is_branch_join()) ok = false;
      }
      if (ok) mask_options[i].push_back(mask);
    }
  }

  std::vector<int> gi(n, 0);
  std::vector<int> mi(blocks.size(), 0);
  std::vector<std::uint32_t> masks(blocks.size(), 0);
  bool found = false;
  double best = kInf;
  std::vector<int> best_gi;
  std::vector<std::uint32_t> best_masks;

  while (true) {
    std::fill(mi.begin(), mi.end(), 0);
    while (true) {
      for (std::size_t i = 0; i < blocks.size(); ++i) masks[i] = mask_options[i][mi[i]];
      Evaluator ev(ctx, amp_limit, gi, index, masks);
      Outcome o = ev.chain(d.blocks, -1, 0, false, -1, 0);
      if (o.ok && o.req <= total_gpus && o.time < best) {
        found = true;
        best = o.time;
        best_gi = gi;
        best_masks = masks;
      }
      std::size_t j = 0;
      while (j < mi.size() && ++mi[j] == static_cast<int>(mask_options[j].size())) {
        mi[j++] = 0;
      }
      if (j == mi.size()) break;
    }
    int j = 0;
    while (j < n && ++gi[j] == c) gi[j++] = 0;
    if (j == n) break;
  }
  if (!found) {
    throw Error(ErrorKind::kInfeasible,
                "no assignment satisfies the amplification limit");
  }

  std::vector<LayerCost> costs(n);
  Evaluator ev(ctx, amp_limit, best_gi, index, best_masks);
  ev.record = &costs;
  ev.chain(d.blocks, -1, 0, false, -1, 0);

  TrainingPlan plan;
  plan.total_gpus = total_gpus;
  plan.amp_limit = amp_limit;
  plan.predicted_iteration_us = best;
  for (int i = 0; i < n; ++i) {
    plan.assignments.push_back({graph.layer(i).id, ctx.candidate(best_gi[i]), 0});
    plan.costs.push_back(costs[i]);
  }
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    BlockChoice bc;
    bc.branch_layer_id = graph.layer(blocks[i]->layer).id;
    bc.join_layer_id = graph.layer(blocks[i]->join).id;
    bc.branch_g = ctx.candidate(best_gi[blocks[i]->layer]);
    bc.join_g = ctx.candidate(best_gi[blocks[i]->join]);
    for (std::size_t ci = 0; ci < blocks[i]->chains.size(); ++ci) {
      if ((best_masks[i] >> ci) & 1u) {
        bc.concurrent_chains.push_back(static_cast<int>(ci));
      }
    }
    plan.blocks.push_back(std::move(bc));
  }
  return plan;
}

// ---------------------------------------------------------------------------
// Serialization.

namespace {

json limit_to_json(double v) { return std::isinf(v) ? json(nullptr) : json(v); }

double limit_from_json(const json& v) {
  return v.is_null() ? std::numeric_limits<double>::infinity() : v.get<double>();
}

}  // namespace

json plan_to_json(const CompGraph& graph, const TrainingPlan& plan) {
  json layers = json::array();
  for (std::size_t i = 0; i < plan.assignments.size(); ++i) {
    const Assignment& a = plan.assignments[i];
    const LayerCost& c = plan.costs[i];
    auto idx = graph.find_index(a.layer_id);
    layers.push_back({{"layer_id", a.layer_id},
                      {"name", idx ? graph.layer(*idx).name : std::string()},
                      {"g", a.g},
                      {"device_offset", a.device_offset},
                      {"comp_us", c.comp_us},
                      {"sync_us", c.sync_us},
                      {"transfer_in_us", c.transfer_in_us},
                      {"amp", c.amp}});
  }
  json blocks = json::array();
  for (const BlockChoice& b : plan.blocks) {
    blocks.push_back({{"branch_layer_id", b.branch_layer_id},
                      {"join_layer_id", b.join_layer_id},
                      {"branch_g", b.branch_g},
                      {"join_g", b.join_g},
                      {"concurrent_chains", b.concurrent_chains},
                      {"serial_cap", b.serial_cap},
                      {"chain_caps", b.chain_caps},
                      {"time_us", b.time_us}});
  }
  return {{"model", graph.model().name},
          {"global_batch", graph.global_batch()},
          {"total_gpus", plan.total_gpus},
          {"amp_limit", limit_to_json(plan.amp_limit)},
          {"predicted_iteration_us", plan.predicted_iteration_us},
          {"fallback_layers", plan.fallback_layers},
          {"layers", layers},
          {"blocks", blocks}};
}

TrainingPlan plan_from_json(const json& doc) {
  try {
    TrainingPlan p;
    p.total_gpus = doc.at("total_gpus").get<int>();
    p.amp_limit = limit_from_json(doc.at("amp_limit"));
    p.predicted_iteration_us = doc.at("predicted_iteration_us").get<double>();
    p.fallback_layers = doc.at("fallback_layers").get<std::vector<int>>();
    for (const json& l : doc.at("layers")) {
      Assignment a{l.at("layer_id").get<int>(), l.at("g").get<int>(),
                   l.value("device_offset", 0)};
      LayerCost c;
      c.layer_id = a.layer_id;
      c.g = a.g;
      c.comp_us = l.at("comp_us").get<double>();
      c.sync_us = l.at("sync_us").get<double>();
      c.transfer_in_us = l.value("transfer_in_us", 0.0);
      c.amp = l.at("amp").get<double>();
      p.assignments.push_back(a);
      p.costs.push_back(c);
    }
    if (doc.contains("blocks")) {
      for (const json& b : doc.at("blocks")) {
        BlockChoice bc;
        bc.branch_layer_id = b.at("branch_layer_id").get<int>();
        bc.join_layer_id = b.at("join_layer_id").get<int>();
        bc.branch_g = b.at("branch_g").get<int>();
        bc.join_g = b.at("join_g").get<int>();
        bc.concurrent_chains = b.at("concurrent_chains").get<std::vector<int>>();
        bc.serial_cap = b.at("serial_cap").get<int>();
        bc.chain_caps = b.at("chain_caps").get<std::vector<int>>();
        bc.time_us = b.at("time_us").get<double>();
        p.blocks.push_back(std::move(bc));
      }
    }
    return p;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("plan document: ") + e.what());
  }
}

TrainingPlan load_plan(const std::filesystem::path& path) {
  return plan_from_json(detail::read_json_file(path, "plan"));
}

void save_plan(const CompGraph& graph, const TrainingPlan& plan,
               const std::filesystem::path& path) {
  detail::write_text_file(path, plan_to_json(graph, plan).dump(2) + "\n");
}

std::string plan_summary(const CompGraph& graph, const TrainingPlan& plan) {
  std::ostringstream os;
  os << std::fixed;
  os << std::left << std::setw(6) << "id" << std::setw(24) << "name"
     << std::right << std::setw(6) << "g" << std::setw(8) << "dev"
     << std::setw(14) << "comp_us" << std::setw(12) << "sync_us"
     << std::setw(12) << "xfer_us" << std::setw(8) << "amp" << '\n';
  for (std::size_t i = 0; i < plan.assignments.size(); ++i) {
    const Assignment& a = plan.assignments[i];
    const LayerCost& c = plan.costs[i];
    auto idx = graph.find_index(a.layer_id);
    std::string name = idx ? graph.layer(*idx).name : "";
    if (name.size() > 23) name.resize(23);
    os << std::left << std::setw(6) << a.layer_id << std::setw(24) << name
       << std::right << std::setw(6) << a.g << std::setw(8) << a.device_offset
       << std::setprecision(1) << std::setw(14) << c.comp_us << std::setw(12)
       << c.sync_us << std::setw(12) << c.transfer_in_us << std::setprecision(3)
       << std::setw(8) << c.amp << '\n';
  }
  os << std::setprecision(3) << "predicted iteration time: "
     << plan.predicted_iteration_us << " us\n";
  os << "amp limit: ";
  if (std::isinf(plan.amp_limit)) {
    os << "inf";
  } else {
    os << plan.amp_limit;
  }
  os << "\nfallback layers: " << plan.fallback_layers.size() << '\n';
  return os.str();
}

}  // namespace burstpar
