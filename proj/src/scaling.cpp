// Copyright 2026 The burstpar Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "burstpar/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "burstpar/cost_model.hpp"
#include "burstpar/error.hpp"
#include "json_io.hpp"

namespace burstpar {

using nlohmann::json;

void SampleEfficiencyCurve::validate() const {
  if (points.empty()) throw Error(ErrorKind::kValidation, "curve has no points");
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].first < 1 || !(points[i].second > 0.0)) {
      throw Error(ErrorKind::kValidation, "curve point " + std::to_string(i) +
                                              " needs batch >= 1 and steps > 0");
    }
    if (i > 0 && points[i].first <= points[i - 1].first) {
      throw Error(ErrorKind::kValidation, "curve batches must be strictly increasing");
    }
    if (i > 0 && points[i].second > points[i - 1].second) {
      throw Error(ErrorKind::kValidation, "curve steps must be nonincreasing in batch");
    }
  }
}

double SampleEfficiencyCurve::steps_at(std::int64_t batch) const {
  if (points.empty() || batch < min_batch() || batch > max_batch()) {
    throw Error(ErrorKind::kValidation,
                "curve domain exhausted: batch " + std::to_string(batch) +
                    " outside the sample-efficiency curve");
  }
  auto hi = std::lower_bound(points.begin(), points.end(), batch,
                             [](const auto& p, std::int64_t b) { return p.first < b; });
  if (hi->first == batch) return hi->second;
  auto lo = hi - 1;
  double x0 = std::log(static_cast<double>(lo->first));
  double x1 = std::log(static_cast<double>(hi->first));
  double y0 = std::log(lo->second), y1 = std::log(hi->second);
  double x = std::log(static_cast<double>(batch));
  return std::exp(y0 + (y1 - y0) * (x - x0) / (x1 - x0));
}

SampleEfficiencyCurve synthetic_curve(double floor_steps, double critical_batch,
                                      std::int64_t lo, std::int64_t hi,
                                      double target_error) {
  SampleEfficiencyCurve c;
  c.target_error = target_error;
  double a = floor_steps * critical_batch;
  for (std::int64_t b = lo; b <= hi; b *= 2) {
    c.points.emplace_back(b, std::ceil(a / static_cast<double>(b) + floor_steps));
  }
  c.validate();
  return c;
}

SampleEfficiencyCurve curve_from_json(const json& doc) {
  SampleEfficiencyCurve c;
  c.target_error = detail::field<double>(doc, "target_error", "curve");
  json pts = detail::field<json>(doc, "points", "curve");
  if (!pts.is_array()) throw Error(ErrorKind::kParse, "curve: 'points' must be an array");
  for (const json& p : pts) {
    c.points.emplace_back(detail::field<std::int64_t>(p, "batch", "curve point"),
                          detail::field<double>(p, "steps", "curve point"));
  }
  c.validate();
  return c;
}

json curve_to_json(const SampleEfficiencyCurve& curve) {
  json pts = json::array();
  for (const auto& [b, s] : curve.points) pts.push_back({{"batch", b}, {"steps", s}});
  return {{"target_error", curve.target_error}, {"points", pts}};
}

SampleEfficiencyCurve load_curve(const std::filesystem::path& path) {
  return curve_from_json(detail::read_json_file(path, "curve"));
}

void save_curve(const SampleEfficiencyCurve& curve, const std::filesystem::path& path) {
  detail::write_text_file(path, curve_to_json(curve).dump(2) + "\n");
}

const char* strategy_name(Strategy s) {
  switch (s) {
    case Strategy::kWeak: return "weak";
    case Strategy::kStrong: return "strong";
    case Strategy::kBatchOptimal: return "batch_optimal";
  }
  return "?";
}

Strategy parse_strategy(const std::string& name) {
  if (name == "weak") return Strategy::kWeak;
  if (name == "strong") return Strategy::kStrong;
  if (name == "batch_optimal") return Strategy::kBatchOptimal;
  throw Error(ErrorKind::kUsage, "unknown strategy: " + name);
}

namespace {

int device_batch(int n_gpus, std::int64_t global_batch) {
  if (n_gpus < 1) throw Error(ErrorKind::kValidation, "GPU count must be >= 1");
  if (global_batch < 1) throw Error(ErrorKind::kValidation, "global batch must be >= 1");
  std::int64_t b = (global_batch + n_gpus - 1) / n_gpus;
  if (b > std::numeric_limits<int>::max()) {
    throw Error(ErrorKind::kValidation, "per-device batch too large");
  }
  return static_cast<int>(b);
}

// `graph` already carries the network of interest.
double iteration_time_on(const CompGraph& graph, int n_gpus, std::int64_t global_batch) {
  int b = device_batch(n_gpus, global_batch);
  double t = 0.0;
  for (std::size_t i = 0; i < graph.size(); ++i) {
    const int li = static_cast<int>(i);
    if (graph.layer(li).is_virtual()) continue;
    const auto& es = graph.profile(li).entries;
    if (b < es.front().batch || b > es.back().batch) {
      throw Error(ErrorKind::kValidation,
                  "profile of layer " + std::to_string(graph.layer(li).id) +
                      " does not cover per-device batch " + std::to_string(b));
    }
    t += profile_time_at_batch(graph.profile(li), b);
  }
  for (std::size_t i = 0; i < graph.size(); ++i) {
    t += sync_time(graph, static_cast<int>(i), n_gpus);
  }
  return t;
}

struct Evaluated {
  std::int64_t batch;
  double iter_us;
  double steps;
  double tta_s;
};

Evaluated evaluate(const CompGraph& graph, const SampleEfficiencyCurve& curve, int n_gpus,
                   std::int64_t batch) {
  Evaluated e;
  e.batch = batch;
  e.steps = curve.steps_at(batch);
  e.iter_us = iteration_time_on(graph, n_gpus, batch);
  e.tta_s = e.steps * e.iter_us / 1e6;
  return e;
}

ScalingEstimate estimate_on(Strategy strategy, const CompGraph& graph,
                            const SampleEfficiencyCurve& curve, int n_gpus,
                            std::int64_t base_batch, double baseline_tta) {
  Evaluated best{};
  switch (strategy) {
    case Strategy::kWeak:
      best = evaluate(graph, curve, n_gpus, base_batch * n_gpus);
      break;
    case Strategy::kStrong:
      best = evaluate(graph, curve, n_gpus, base_batch);
      break;
    case Strategy::kBatchOptimal: {
      bool found = false;
      for (std::int64_t b : batch_grid(curve, n_gpus, base_batch)) {
        if (!profile_covers(graph, n_gpus, b)) continue;
        Evaluated e = evaluate(graph, curve, n_gpus, b);
        if (!found || e.tta_s < best.tta_s) best = e;
        found = true;
      }
      if (!found) {
        throw Error(ErrorKind::kValidation,
                    "curve domain exhausted: no batch size covered by both the curve "
                    "and the profiles at " + std::to_string(n_gpus) + " GPUs");
      }
      break;
    }
  }
  ScalingEstimate r;
  r.strategy = strategy;
  r.n_gpus = n_gpus;
  r.chosen_global_batch = best.batch;
  r.per_gpu_batch = static_cast<double>(best.batch) / n_gpus;
  r.iteration_time_us = best.iter_us;
  r.steps = best.steps;
  r.time_to_accuracy_s = best.tta_s;
  r.speedup_vs_1gpu = baseline_tta / best.tta_s;
  return r;
}

}  // namespace

bool profile_covers(const CompGraph& graph, int n_gpus, std::int64_t global_batch) {
  int b = device_batch(n_gpus, global_batch);
  for (std::size_t i = 0; i < graph.size(); ++i) {
    if (graph.layer(static_cast<int>(i)).is_virtual()) continue;
    const auto& es = graph.profile(static_cast<int>(i)).entries;
    if (b < es.front().batch || b > es.back().batch) return false;
  }
  return true;
}

double iteration_time(const CompGraph& graph, int n_gpus, std::int64_t global_batch,
                      const NetworkProfile& network) {
  return iteration_time_on(with_network(graph, network), n_gpus, global_batch);
}

std::vector<std::int64_t> batch_grid(const SampleEfficiencyCurve& curve, int n_gpus,
                                     std::int64_t base_batch) {
  std::set<std::int64_t> grid;
  for (std::size_t i = 0; i < curve.points.size(); ++i) {
    grid.insert(curve.points[i].first);
    if (i + 1 < curve.points.size()) {
      double mid = std::sqrt(static_cast<double>(curve.points[i].first) *
                             static_cast<double>(curve.points[i + 1].first));
      grid.insert(std::llround(mid));
    }
  }
  grid.insert(base_batch);
  grid.insert(base_batch * n_gpus);
  std::vector<std::int64_t> out;
  for (std::int64_t b : grid) {
    if (b >= curve.min_batch() && b <= curve.max_batch()) out.push_back(b);
  }
  return out;
}

ScalingEstimate estimate(Strategy strategy, const CompGraph& graph,
                         const SampleEfficiencyCurve& curve, int n_gpus,
                         const NetworkProfile& network, std::int64_t base_batch) {
  return speedup_curve(strategy, graph, curve, {n_gpus}, network, base_batch).front();
}

std::vector<ScalingEstimate> speedup_curve(Strategy strategy, const CompGraph& graph,
                                           const SampleEfficiencyCurve& curve,
                                           const std::vector<int>& gpu_counts,
                                           const NetworkProfile& network,
                                           std::int64_t base_batch) {
  curve.validate();
  CompGraph g = with_network(graph, network);
  double baseline = evaluate(g, curve, 1, base_batch).tta_s;
  std::vector<ScalingEstimate> rows;
  for (int n : gpu_counts) {
    rows.push_back(estimate_on(strategy, g, curve, n, base_batch, baseline));
  }
  return rows;
}

std::string estimates_to_csv(const std::vector<ScalingEstimate>& rows) {
  std::ostringstream os;
  os << "n_gpus,strategy,batch,iter_us,steps,tta_s,speedup\n";
  char buf[256];
  for (const ScalingEstimate& r : rows) {
    std::snprintf(buf, sizeof(buf), "%d,%s,%lld,%.4f,%.4f,%.6f,%.6f\n", r.n_gpus,
                  strategy_name(r.strategy), static_cast<long long>(r.chosen_global_batch),
                  r.iteration_time_us, r.steps, r.time_to_accuracy_s, r.speedup_vs_1gpu);
    os << buf;
  }
  return os.str();
}

}  // namespace burstpar
