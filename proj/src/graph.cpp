// Copyright 2026 The burstpar Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "burstpar/graph.hpp"

#include <algorithm>
#include <map>
#include <queue>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "burstpar/error.hpp"
#include "json_io.hpp"

namespace burstpar {

namespace {

using nlohmann::json;

[[noreturn]] void invalid(const std::string& msg) {
  throw Error(ErrorKind::kValidation, msg);
}

using detail::field;

}  // namespace

CompGraph CompGraph::build(ModelInfo model, std::vector<Layer> layers,
                           std::vector<LayerProfile> profiles,
                           NetworkProfile network) {
  if (layers.empty()) invalid("graph has no layers");
  if (model.global_batch < 1) invalid("global_batch must be >= 1");
  if (!(network.bandwidth_bytes_per_sec > 0.0)) {
    invalid("network bandwidth must be > 0");
  }
  if (!(network.propagation_delay_us >= 0.0)) {
    invalid("network propagation delay must be >= 0");
  }

  std::map<int, int> by_id;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const Layer& l = layers[i];
    if (!by_id.emplace(l.id, static_cast<int>(i)).second) {
      invalid("duplicate layer id " + std::to_string(l.id));
    }
    if (l.params_bytes < 0 || l.activation_bytes_per_sample < 0) {
      invalid("layer " + std::to_string(l.id) + " has negative sizes");
    }
    if (l.is_virtual() &&
        (l.params_bytes != 0 || l.activation_bytes_per_sample != 0)) {
      invalid("virtual layer " + std::to_string(l.id) + " must be zero-sized");
    }
  }

  const auto lookup = [&](int id, int referrer) {
    auto it = by_id.find(id);
    if (it == by_id.end()) {
      invalid("missing layer " + std::to_string(id) + " referenced by layer " +
              std::to_string(referrer));
    }
    return it->second;
  };

  // Union of both adjacency lists; either side may be omitted in the file.
  std::set<std::pair<int, int>> edges;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    for (int p : layers[i].predecessors) {
      edges.emplace(lookup(p, layers[i].id), static_cast<int>(i));
    }
    for (int s : layers[i].successors) {
      edges.emplace(static_cast<int>(i), lookup(s, layers[i].id));
    }
  }

  int n = static_cast<int>(layers.size());
  std::vector<std::vector<int>> succ(n), pred(n);
  for (auto [a, b] : edges) {
    if (a == b) invalid("cycle detected: layer " + std::to_string(layers[a].id));
    succ[a].push_back(b);
    pred[b].push_back(a);
  }

  std::vector<LayerProfile> by_layer(n);
  std::vector<bool> has_profile(n, false);
  for (LayerProfile& p : profiles) {
    auto it = by_id.find(p.layer_id);
    if (it == by_id.end()) {
      invalid("profile for missing layer " + std::to_string(p.layer_id));
    }
    int idx = it->second;
    if (has_profile[idx]) {
      invalid("duplicate profile for layer " + std::to_string(p.layer_id));
    }
    std::sort(p.entries.begin(), p.entries.end(),
              [](const ProfileEntry& a, const ProfileEntry& b) {
                return a.batch < b.batch;
              });
    for (std::size_t k = 0; k < p.entries.size(); ++k) {
      const ProfileEntry& e = p.entries[k];
      if (e.batch < 1) {
        invalid("profile batch must be >= 1 (layer " +
                std::to_string(p.layer_id) + ")");
      }
      if (!(e.fwd_us > 0.0) || !(e.bwd_us > 0.0)) {
        invalid("non-positive time in profile of layer " +
                std::to_string(p.layer_id) + " at batch " +
                std::to_string(e.batch));
      }
      if (k > 0 && p.entries[k - 1].batch == e.batch) {
        invalid("duplicate profile batch " + std::to_string(e.batch) +
                " for layer " + std::to_string(p.layer_id));
      }
    }
    has_profile[idx] = true;
    by_layer[idx] = std::move(p);
  }
  for (int i = 0; i < n; ++i) {
    by_layer[i].layer_id = layers[i].id;
    if (!layers[i].is_virtual() &&
        (!has_profile[i] || by_layer[i].entries.empty())) {
      invalid("missing profile entry for layer " + std::to_string(layers[i].id));
    }
  }

  // Virtual source/sink for multi-entry or multi-exit graphs.
  std::vector<int> sources, sinks;
  for (int i = 0; i < n; ++i) {
    if (pred[i].empty()) sources.push_back(i);
    if (succ[i].empty()) sinks.push_back(i);
  }
  if (sources.empty() || sinks.empty()) invalid("cycle detected: no source or sink");
  int next_id = by_id.rbegin()->first + 1;
  const auto add_virtual = [&](const char* name) {
    Layer v;
    v.id = next_id++;
    v.name = name;
    v.kind = kVirtualKind;
    layers.push_back(v);
    LayerProfile p;
    p.layer_id = v.id;
    by_layer.push_back(p);
    succ.emplace_back();
    pred.emplace_back();
    return n++;
  };
  if (sources.size() > 1) {
    int s = add_virtual("__source");
    for (int i : sources) {
      succ[s].push_back(i);
      pred[i].push_back(s);
    }
  }
  if (sinks.size() > 1) {
    int t = add_virtual("__sink");
    for (int i : sinks) {
      succ[i].push_back(t);
      pred[t].push_back(i);
    }
  }

  // Kahn's algorithm; ties resolved by original position for determinism.
  std::vector<int> indeg(n);
  for (int i = 0; i < n; ++i) indeg[i] = static_cast<int>(pred[i].size());
  std::priority_queue<int, std::vector<int>, std::greater<>> ready;
  for (int i = 0; i < n; ++i) {
    if (indeg[i] == 0) ready.push(i);
  }
  std::vector<int> order;
  order.reserve(n);
  while (!ready.empty()) {
    int u = ready.top();
    ready.pop();
    order.push_back(u);
    for (int v : succ[u]) {
      if (--indeg[v] == 0) ready.push(v);
    }
  }
  if (static_cast<int>(order.size()) != n) {
    std::ostringstream os;
    os << "cycle detected among layers";
    for (int i = 0; i < n; ++i) {
      if (indeg[i] > 0) os << ' ' << layers[i].id;
    }
    invalid(os.str());
  }

  std::vector<int> position(n);
  for (int k = 0; k < n; ++k) position[order[k]] = k;

  CompGraph g;
  g.model_ = std::move(model);
  g.network_ = network;
  g.layers_.resize(n);
  g.profiles_.resize(n);
  g.succ_.resize(n);
  g.pred_.resize(n);
  for (int k = 0; k < n; ++k) {
    int old = order[k];
    g.layers_[k] = std::move(layers[old]);
    g.profiles_[k] = std::move(by_layer[old]);
    for (int v : succ[old]) g.succ_[k].push_back(position[v]);
    for (int u : pred[old]) g.pred_[k].push_back(position[u]);
    std::sort(g.succ_[k].begin(), g.succ_[k].end());
    std::sort(g.pred_[k].begin(), g.pred_[k].end());
  }
  for (int k = 0; k < n; ++k) {
    Layer& l = g.layers_[k];
    l.predecessors.clear();
    l.successors.clear();
    for (int u : g.pred_[k]) l.predecessors.push_back(g.layers_[u].id);
    for (int v : g.succ_[k]) l.successors.push_back(g.layers_[v].id);
    g.id_to_index_.emplace_back(l.id, k);
    if (g.pred_[k].empty()) g.source_ = k;
    if (g.succ_[k].empty()) g.sink_ = k;
  }
  std::sort(g.id_to_index_.begin(), g.id_to_index_.end());
  return g;
}

std::optional<int> CompGraph::find_index(int layer_id) const {
  auto it = std::lower_bound(
      id_to_index_.begin(), id_to_index_.end(), std::make_pair(layer_id, -1));
  if (it == id_to_index_.end() || it->first != layer_id) return std::nullopt;
  return it->second;
}

int CompGraph::index_of(int layer_id) const {
  auto idx = find_index(layer_id);
  if (!idx) invalid("missing layer " + std::to_string(layer_id));
  return *idx;
}

std::int64_t CompGraph::total_params_bytes() const {
  std::int64_t total = 0;
  for (const Layer& l : layers_) total += l.params_bytes;
  return total;
}

CompGraph with_global_batch(const CompGraph& graph, int global_batch) {
  ModelInfo model = graph.model();
  model.global_batch = global_batch;
  std::vector<LayerProfile> profiles;
  for (std::size_t i = 0; i < graph.size(); ++i) {
    profiles.push_back(graph.profile(static_cast<int>(i)));
  }
  return CompGraph::build(model, graph.layers(), profiles, graph.network());
}

CompGraph with_network(const CompGraph& graph, const NetworkProfile& network) {
  std::vector<LayerProfile> profiles;
  for (std::size_t i = 0; i < graph.size(); ++i) {
    profiles.push_back(graph.profile(static_cast<int>(i)));
  }
  return CompGraph::build(graph.model(), graph.layers(), profiles, network);
}

CompGraph graph_from_json(const json& doc) {
  if (!doc.is_object()) throw Error(ErrorKind::kParse, "graph document must be an object");
  const json& m = doc.contains("model") ? doc.at("model") : json();
  ModelInfo model;
  model.name = field<std::string>(m, "name", "model");
  model.global_batch = field<int>(m, "global_batch", "model");
  if (m.contains("input_shape")) {
    model.input_shape = field<std::vector<int>>(m, "input_shape", "model");
  }

  if (!doc.contains("layers") || !doc.at("layers").is_array()) {
    throw Error(ErrorKind::kParse, "missing array 'layers'");
  }
  std::vector<Layer> layers;
  for (const json& jl : doc.at("layers")) {
    Layer l;
    l.id = field<int>(jl, "id", "layer");
    std::string where = "layer " + std::to_string(l.id);
    l.name = field<std::string>(jl, "name", where);
    l.kind = field<std::string>(jl, "kind", where);
    l.params_bytes = field<std::int64_t>(jl, "params_bytes", where);
    l.activation_bytes_per_sample =
        field<std::int64_t>(jl, "activation_bytes_per_sample", where);
    if (jl.contains("predecessors")) {
      l.predecessors = field<std::vector<int>>(jl, "predecessors", where);
    }
    if (jl.contains("successors")) {
      l.successors = field<std::vector<int>>(jl, "successors", where);
    }
    layers.push_back(std::move(l));
  }

  std::vector<LayerProfile> profiles;
  if (doc.contains("profiles")) {
    if (!doc.at("profiles").is_array()) {
      throw Error(ErrorKind::kParse, "'profiles' must be an array");
    }
    for (const json& jp : doc.at("profiles")) {
      LayerProfile p;
      p.layer_id = field<int>(jp, "layer_id", "profile");
      std::string where = "profile of layer " + std::to_string(p.layer_id);
      const json entries = field<json>(jp, "entries", where);
      if (!entries.is_array()) throw Error(ErrorKind::kParse, where + ": entries must be an array");
      for (const json& je : entries) {
        ProfileEntry e;
        e.batch = field<int>(je, "batch", where);
        e.fwd_us = field<double>(je, "fwd_us", where);
        e.bwd_us = field<double>(je, "bwd_us", where);
        p.entries.push_back(e);
      }
      profiles.push_back(std::move(p));
    }
  }

  const json& jn = doc.contains("network") ? doc.at("network") : json();
  NetworkProfile net;
  net.bandwidth_bytes_per_sec =
      field<double>(jn, "bandwidth_bytes_per_sec", "network");
  net.propagation_delay_us = field<double>(jn, "propagation_delay_us", "network");

  return CompGraph::build(std::move(model), std::move(layers),
                          std::move(profiles), net);
}

json graph_to_json(const CompGraph& graph) {
  json doc;
  doc["model"] = {{"name", graph.model().name},
                  {"global_batch", graph.model().global_batch},
                  {"input_shape", graph.model().input_shape}};
  json layers = json::array();
  json profiles = json::array();
  for (std::size_t i = 0; i < graph.size(); ++i) {
    const Layer& l = graph.layer(static_cast<int>(i));
    layers.push_back({{"id", l.id},
                      {"name", l.name},
                      {"kind", l.kind},
                      {"params_bytes", l.params_bytes},
                      {"activation_bytes_per_sample", l.activation_bytes_per_sample},
                      {"predecessors", l.predecessors},
                      {"successors", l.successors}});
    if (l.is_virtual()) continue;
    json entries = json::array();
    for (const ProfileEntry& e : graph.profile(static_cast<int>(i)).entries) {
      entries.push_back({{"batch", e.batch}, {"fwd_us", e.fwd_us}, {"bwd_us", e.bwd_us}});
    }
    profiles.push_back({{"layer_id", l.id}, {"entries", entries}});
  }
  doc["layers"] = std::move(layers);
  doc["profiles"] = std::move(profiles);
  doc["network"] = {
      {"bandwidth_bytes_per_sec", graph.network().bandwidth_bytes_per_sec},
      {"propagation_delay_us", graph.network().propagation_delay_us}};
  return doc;
}

CompGraph load_graph(const std::filesystem::path& path) {
  return graph_from_json(detail::read_json_file(path, "graph"));
}

void save_graph(const CompGraph& graph, const std::filesystem::path& path) {
  detail::write_text_file(path, graph_to_json(graph).dump(2) + "\n");
}

int per_device_batch(int global_batch, int gpus) {
  if (gpus < 1) throw Error(ErrorKind::kValidation, "GPU count must be >= 1");
  return (global_batch + gpus - 1) / gpus;
}

double profile_time_at_batch(const LayerProfile& profile, int batch,
                             Interpolation mode) {
  const auto& es = profile.entries;
  if (es.empty()) {
    throw Error(ErrorKind::kValidation,
                "missing profile entry for layer " + std::to_string(profile.layer_id));
  }
  auto hi = std::lower_bound(
      es.begin(), es.end(), batch,
      [](const ProfileEntry& e, int b) { return e.batch < b; });
  if (hi != es.end() && hi->batch == batch) return hi->total_us();
  if (mode == Interpolation::kExactOnly) {
    throw Error(ErrorKind::kValidation,
                "missing profile entry for layer " + std::to_string(profile.layer_id) +
                    " at batch " + std::to_string(batch) +
                    " (interpolation disabled)");
  }
  if (hi == es.begin()) return es.front().total_us();
  if (hi == es.end()) return es.back().total_us();
  const ProfileEntry& lo = *(hi - 1);
  double t0 = lo.total_us();
  double t1 = hi->total_us();
  double frac = static_cast<double>(batch - lo.batch) /
                static_cast<double>(hi->batch - lo.batch);
  return std::clamp(t0 + (t1 - t0) * frac, std::min(t0, t1), std::max(t0, t1));
}

double profile_lookup(const CompGraph& graph, int layer_id, int gpus,
                      Interpolation mode) {
  int idx = graph.index_of(layer_id);
  if (graph.layer(idx).is_virtual()) return 0.0;
  return profile_time_at_batch(graph.profile(idx),
                               per_device_batch(graph.global_batch(), gpus), mode);
}

}  // namespace burstpar
