// Copyright 2026 The burstpar Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace burstpar {

inline constexpr const char* kVirtualKind = "virtual";

struct Layer {
  int id = 0;
  std::string name;
  std::string kind;
  std::int64_t params_bytes = 0;
  std::int64_t activation_bytes_per_sample = 0;
  std::vector<int> predecessors;  // layer ids
  std::vector<int> successors;    // layer ids

  /// Zero-cost source/sink inserted so the graph has one entry and one exit.
  bool is_virtual() const { return kind == kVirtualKind; }
};

struct ProfileEntry {
  int batch = 0;  // per-device samples
  double fwd_us = 0.0;
  double bwd_us = 0.0;

  double total_us() const { return fwd_us + bwd_us; }
};

struct LayerProfile {
  int layer_id = 0;
  std::vector<ProfileEntry> entries;  // sorted by batch, strictly increasing
};

struct NetworkProfile {
  double bandwidth_bytes_per_sec = 0.0;  // per GPU, full bi-section
  double propagation_delay_us = 0.0;
};

struct ModelInfo {
  std::string name;
  int global_batch = 0;
  std::vector<int> input_shape;
};

/// Static DNN computation graph with per-layer profiles. Immutable after
/// construction; layers are stored in a topological order and addressed by
/// dense index internally, by `Layer::id` externally.
class CompGraph {
 public:
  /// Validates and normalizes: unions predecessor/successor lists, rejects
  /// cycles, dangling edges, missing profiles and non-positive times, and
  /// inserts virtual source/sink layers when there are several entries/exits.
  static CompGraph build(ModelInfo model, std::vector<Layer> layers,
                         std::vector<LayerProfile> profiles,
                         NetworkProfile network);

  const ModelInfo& model() const { return model_; }
  int global_batch() const { return model_.global_batch; }
  const NetworkProfile& network() const { return network_; }

  std::size_t size() const { return layers_.size(); }
  const std::vector<Layer>& layers() const { return layers_; }
  const Layer& layer(int index) const { return layers_.at(index); }
  /// Profile of the layer at `index`; empty entries for virtual layers.
  const LayerProfile& profile(int index) const { return profiles_.at(index); }

  int index_of(int layer_id) const;
  std::optional<int> find_index(int layer_id) const;

  const std::vector<int>& succ(int index) const { return succ_[index]; }
  const std::vector<int>& pred(int index) const { return pred_[index]; }

  int source() const { return source_; }
  int sink() const { return sink_; }

  std::int64_t total_params_bytes() const;

 private:
  ModelInfo model_;
  NetworkProfile network_;
  std::vector<Layer> layers_;
  std::vector<LayerProfile> profiles_;
  std::vector<std::vector<int>> succ_;
  std::vector<std::vector<int>> pred_;
  std::vector<std::pair<int, int>> id_to_index_;  // sorted by id
  int source_ = 0;
  int sink_ = 0;
};

/// Same graph with a different global batch or network.
CompGraph with_global_batch(const CompGraph& graph, int global_batch);
CompGraph with_network(const CompGraph& graph, const NetworkProfile& network);

CompGraph graph_from_json(const nlohmann::json& doc);
nlohmann::json graph_to_json(const CompGraph& graph);

CompGraph load_graph(const std::filesystem::path& path);
void save_graph(const CompGraph& graph, const std::filesystem::path& path);

/// Per-device batch for `gpus` devices: ceil(global_batch / gpus).
int per_device_batch(int global_batch, int gpus);

enum class Interpolation { kLinear, kExactOnly };

/// Forward+backward time of one profile at a per-device batch. Between two
/// profiled batches the total is linearly interpolated; outside the profiled
/// range it is clamped to the nearest end. With kExactOnly a missing entry is
/// an error.
double profile_time_at_batch(const LayerProfile& profile, int batch,
                             Interpolation mode = Interpolation::kLinear);

/// comp(i, g): forward+backward time of `layer_id` at per-device batch
/// ceil(B/g). Virtual layers cost nothing.
double profile_lookup(const CompGraph& graph, int layer_id, int gpus,
                      Interpolation mode = Interpolation::kLinear);

}  // namespace burstpar
