// Copyright 2026 The burstpar Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "burstpar/decompose.hpp"
#include "burstpar/error.hpp"
#include "burstpar/synth.hpp"

namespace burstpar {
namespace {

TEST(SynthTest, VggLikeIsTwentyOneLayerChain) {
  CompGraph g = generate_model("vgg_like");
  EXPECT_EQ(g.size(), 21u);
  EXPECT_EQ(param_count(g), 132'000'000);
  BlockDecomposition d = decompose(g);
  EXPECT_EQ(d.branch_join_count(), 0u);
  EXPECT_EQ(d.top_level_size(), 21u);
  SynthOptions eleven;
  eleven.depth = 11;
  EXPECT_EQ(generate_model("vgg_like", eleven).size(), 16u);
}

TEST(SynthTest, WideResNetLike) {
  CompGraph g = generate_model("wideresnet_like");
  EXPECT_EQ(g.size(), 105u);
  EXPECT_EQ(param_count(g), 127'000'000);
  EXPECT_EQ(decompose(g).branch_join_count(), 33u);
}

TEST(SynthTest, InceptionLikeHasBranches) {
  CompGraph g = generate_model("inception_like");
  EXPECT_EQ(g.size(), 119u);
  EXPECT_EQ(param_count(g), 24'000'000);
  BlockDecomposition d = decompose(g);
  // 11 modules plus the nested splits of the last two.
  EXPECT_EQ(d.branch_join_count(), 15u);
  EXPECT_EQ(d.max_depth(), 2u);
}

TEST(SynthTest, SameSeedSameFile) {
  for (const std::string& f : model_families()) {
    SynthOptions o;
    o.seed = 9;
    std::string a = graph_to_json(generate_model(f, o)).dump();
    std::string b = graph_to_json(generate_model(f, o)).dump();
    EXPECT_EQ(a, b) << f;
    o.seed = 10;
    EXPECT_NE(graph_to_json(generate_model(f, o)).dump(), a) << f;
  }
}

TEST(SynthTest, CostShapes) {
  SynthOptions o;
  o.jitter = 0.0;
  CompGraph g = generate_model("vgg_like", o);
  const int conv = g.index_of(1), fc = g.index_of(18);
  ASSERT_EQ(g.layer(conv).kind, "conv");
  ASSERT_EQ(g.layer(fc).kind, "dense");
  // Conv: sublinear below the knee, linear above it.
  double c1 = profile_time_at_batch(g.profile(conv), 1);
  double c32 = profile_time_at_batch(g.profile(conv), 32);
  double c64 = profile_time_at_batch(g.profile(conv), 64);
  EXPECT_GT(c1 * 32, 4 * c32);
  EXPECT_NEAR(c64 - o.floor_us * 3, 2 * (c32 - o.floor_us * 3), 1e-6 * c64);
  // Dense: near flat at small batches.
  double d1 = profile_time_at_batch(g.profile(fc), 1);
  double d8 = profile_time_at_batch(g.profile(fc), 8);
  EXPECT_LT(d8, 1.1 * d1);
  for (const ProfileEntry& e : g.profile(conv).entries) {
    EXPECT_DOUBLE_EQ(e.bwd_us, 2 * e.fwd_us);
  }
}

TEST(SynthTest, UnknownFamily) {
  try {
    generate_model("resnet");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kUsage);
  }
}

}  // namespace
}  // namespace burstpar
