// Copyright 2026 The burstpar Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "burstpar/graph.hpp"

namespace burstpar {

inline constexpr std::uint64_t kDefaultSeed = 1;

/// Knobs for the synthetic model families. Profiles cover every power of two
/// up to max(global_batch, profile_max_batch), plus the global batch itself.
///
/// Cost shapes, per layer and per-device batch b:
///   conv:   floor + flops * eff(b) / rate, eff(b) = b above the knee and
///           knee * (b / knee)^alpha below it
///   dense:  floor + weight read + flops * b / rate (near flat for small b)
///   pool, concat: floor + activation traffic, linear in b
/// Backward is twice forward. Every layer gets one seeded multiplicative
/// jitter shared by all of its batch sizes.
struct SynthOptions {
  int global_batch = 32;
  int depth = 16;    // vgg_like: 11 or 16
  int layers = 12;   // custom: chain length
  std::uint64_t seed = kDefaultSeed;
  int profile_max_batch = 1024;
  NetworkProfile network{125e9, 5.0};  // 1 Tbps per GPU
  double jitter = 0.05;                // log-normal sigma
  double flops_per_us = 6e7;
  double mem_bytes_per_us = 1.5e6;
  double floor_us = 8.0;
  int knee = 32;
  double alpha = 0.35;
};

/// Families: vgg_like (chain, 21 layers at depth 16), wideresnet_like
/// (bottleneck residual blocks, 105 layers), inception_like (branch/join
/// modules, 119 layers), custom (random chain).
CompGraph generate_model(const std::string& family, const SynthOptions& options = {});

const std::vector<std::string>& model_families();

/// Trainable parameter count (not bytes) of the generated model.
std::int64_t param_count(const CompGraph& graph);

}  // namespace burstpar
