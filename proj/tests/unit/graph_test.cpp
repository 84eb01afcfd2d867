// Copyright 2026 The burstpar Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "burstpar/decompose.hpp"
#include "burstpar/error.hpp"
#include "burstpar/graph.hpp"
#include "test_util.hpp"

namespace burstpar {
namespace {

using nlohmann::json;

json one_layer_doc() {
  return json::parse(R"({
    "model": {"name": "tiny", "global_batch": 32, "input_shape": [3, 32, 32]},
    "layers": [{"id": 0, "name": "fc", "kind": "dense", "params_bytes": 400,
                "activation_bytes_per_sample": 40,
                "predecessors": [], "successors": []}],
    "profiles": [{"layer_id": 0, "entries": [{"batch": 32, "fwd_us": 100.0,
                                              "bwd_us": 200.0}]}],
    "network": {"bandwidth_bytes_per_sec": 1e9, "propagation_delay_us": 5}
  })");
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::kUsage;
}

TEST(GraphTest, SingleLayerFile) {
  auto dir = std::filesystem::temp_directory_path() / "burstpar_graph_test";
  std::filesystem::create_directories(dir);
  auto path = dir / "one.json";
  std::ofstream(path) << one_layer_doc().dump();
  CompGraph g = load_graph(path);
  ASSERT_EQ(g.size(), 1u);
  EXPECT_EQ(g.global_batch(), 32);
  EXPECT_EQ(g.source(), 0);
  EXPECT_EQ(g.sink(), 0);
  BlockDecomposition d = decompose(g);
  ASSERT_EQ(d.blocks.size(), 1u);
  EXPECT_FALSE(d.blocks[0].is_branch_join());
  EXPECT_DOUBLE_EQ(profile_lookup(g, 0, 1), 300.0);
}

TEST(GraphTest, MissingLayerIsRejected) {
  json doc = one_layer_doc();
  doc["layers"][0]["successors"] = {7};
  try {
    graph_from_json(doc);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kValidation);
    EXPECT_NE(std::string(e.what()).find("missing layer 7"), std::string::npos);
  }
}

TEST(GraphTest, CycleIsRejected) {
  testing::GraphBuilder gb(8);
  auto t = [](int) { return 10.0; };
  gb.layer(0, 0, 0, {1}, t).layer(1, 0, 0, {2}, t).layer(2, 0, 0, {1}, t);
  try {
    gb.build();
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("cycle detected"), std::string::npos);
  }
}

TEST(GraphTest, ProfileErrors) {
  json doc = one_layer_doc();
  doc["profiles"] = json::array();
  EXPECT_EQ(kind_of([&] { graph_from_json(doc); }), ErrorKind::kValidation);

  doc = one_layer_doc();
  doc["profiles"][0]["entries"][0]["fwd_us"] = 0.0;
  try {
    graph_from_json(doc);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("non-positive time"), std::string::npos);
  }

  doc = one_layer_doc();
  doc["layers"][0].erase("params_bytes");
  EXPECT_EQ(kind_of([&] { graph_from_json(doc); }), ErrorKind::kParse);
}

TEST(GraphTest, UnparsableFileIsParseError) {
  auto path = std::filesystem::temp_directory_path() / "burstpar_bad.json";
  std::ofstream(path) << "{not json";
  EXPECT_EQ(kind_of([&] { load_graph(path); }), ErrorKind::kParse);
  EXPECT_EQ(kind_of([&] { load_graph("/nonexistent/graph.json"); }),
            ErrorKind::kIo);
}

TEST(GraphTest, VirtualSourceAndSink) {
  testing::GraphBuilder gb(4);
  auto t = [](int b) { return 10.0 * b; };
  // Two inputs (0, 1) meeting at 2, which fans out to two outputs (3, 4).
  gb.layer(0, 4, 4, {2}, t).layer(1, 4, 4, {2}, t).layer(2, 4, 4, {3, 4}, t)
      .layer(3, 4, 4, {}, t).layer(4, 4, 4, {}, t);
  CompGraph g = gb.build();
  ASSERT_EQ(g.size(), 7u);
  const Layer& src = g.layer(g.source());
  const Layer& snk = g.layer(g.sink());
  EXPECT_TRUE(src.is_virtual());
  EXPECT_TRUE(snk.is_virtual());
  EXPECT_EQ(src.id, 5);
  EXPECT_EQ(snk.id, 6);
  EXPECT_EQ(profile_lookup(g, 5, 1), 0.0);
  // Stored order is topological.
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (int s : g.succ(static_cast<int>(i))) EXPECT_LT(static_cast<int>(i), s);
  }
}

TEST(GraphTest, RoundTripIsStructurallyIdentical) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    testing::BlockDagGen gen(rng);
    CompGraph g = testing::graph_from_edges(rng, gen.generate(2 + trial % 9));
    json first = graph_to_json(g);
    CompGraph back = graph_from_json(first);
    EXPECT_EQ(graph_to_json(back).dump(), first.dump());
    ASSERT_EQ(back.size(), g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
      EXPECT_EQ(back.layer(static_cast<int>(i)).id, g.layer(static_cast<int>(i)).id);
      EXPECT_EQ(back.succ(static_cast<int>(i)), g.succ(static_cast<int>(i)));
    }
  }
  // Files, including graphs with inserted virtual layers.
  testing::GraphBuilder gb(4);
  auto t = [](int b) { return 1.0 + b; };
  gb.layer(0, 1, 1, {2}, t).layer(1, 1, 1, {2}, t).layer(2, 1, 1, {}, t);
  CompGraph g = gb.build();
  auto path = std::filesystem::temp_directory_path() / "burstpar_rt.json";
  save_graph(g, path);
  CompGraph back = load_graph(path);
  EXPECT_EQ(graph_to_json(back).dump(), graph_to_json(g).dump());
  EXPECT_EQ(back.size(), g.size());
}

TEST(ProfileLookupTest, ExactEntry) {
  LayerProfile p{0, {{32, 100.0, 200.0}}};
  EXPECT_DOUBLE_EQ(profile_time_at_batch(p, 32), 300.0);
}

TEST(ProfileLookupTest, LinearInterpolationByHand) {
  // Totals: b=8 -> 200, b=16 -> 600. B=48, g=4 -> b=12.
  // 200 + (12 - 8) / (16 - 8) * (600 - 200) = 400.
  json doc = json::parse(R"({
    "model": {"name": "m", "global_batch": 48},
    "layers": [{"id": 3, "name": "c", "kind": "conv", "params_bytes": 0,
                "activation_bytes_per_sample": 0, "predecessors": [],
                "successors": []}],
    "profiles": [{"layer_id": 3, "entries": [
        {"batch": 8, "fwd_us": 50, "bwd_us": 150},
        {"batch": 16, "fwd_us": 200, "bwd_us": 400},
        {"batch": 48, "fwd_us": 500, "bwd_us": 1000}]}],
    "network": {"bandwidth_bytes_per_sec": 1e9, "propagation_delay_us": 0}
  })");
  CompGraph g = graph_from_json(doc);
  EXPECT_DOUBLE_EQ(profile_lookup(g, 3, 4), 400.0);
  EXPECT_DOUBLE_EQ(profile_lookup(g, 3, 1), 1500.0);
  // g=3 -> b=16 exactly.
  EXPECT_DOUBLE_EQ(profile_lookup(g, 3, 3), 600.0);
  // b=5 is below the smallest entry: clamped.
  EXPECT_DOUBLE_EQ(profile_lookup(g, 3, 10), 200.0);
  EXPECT_EQ(kind_of([&] { profile_lookup(g, 3, 4, Interpolation::kExactOnly); }),
            ErrorKind::kValidation);
  EXPECT_DOUBLE_EQ(profile_lookup(g, 3, 3, Interpolation::kExactOnly), 600.0);
}

TEST(ProfileLookupTest, ClampsAboveLargestEntry) {
  LayerProfile p{0, {{2, 1.0, 1.0}, {4, 2.0, 2.0}}};
  EXPECT_DOUBLE_EQ(profile_time_at_batch(p, 64), 4.0);
  EXPECT_DOUBLE_EQ(profile_time_at_batch(p, 1), 2.0);
}

TEST(ProfileLookupTest, InterpolationStaysWithinBrackets) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> t(1.0, 1000.0);
  for (int trial = 0; trial < 200; ++trial) {
    LayerProfile p;
    int b = 1;
    for (int k = 0; k < 6; ++k) {
      b += 1 + static_cast<int>(rng() % 7);
      p.entries.push_back({b, t(rng), t(rng)});
    }
    for (int q = 1; q <= b + 3; ++q) {
      double v = profile_time_at_batch(p, q);
      std::size_t k = 0;
      while (k + 1 < p.entries.size() && p.entries[k + 1].batch < q) ++k;
      double lo, hi;
      if (q <= p.entries.front().batch) {
        lo = hi = p.entries.front().total_us();
      } else if (q >= p.entries.back().batch) {
        lo = hi = p.entries.back().total_us();
      } else {
        lo = std::min(p.entries[k].total_us(), p.entries[k + 1].total_us());
        hi = std::max(p.entries[k].total_us(), p.entries[k + 1].total_us());
      }
      EXPECT_GE(v, lo);
      EXPECT_LE(v, hi);
    }
  }
}

TEST(GraphTest, PerDeviceBatchIsCeiling) {
  EXPECT_EQ(per_device_batch(32, 1), 32);
  EXPECT_EQ(per_device_batch(32, 3), 11);
  EXPECT_EQ(per_device_batch(5, 8), 1);
}

}  // namespace
}  // namespace burstpar
