// Copyright 2026 The burstpar Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include <random>

#include <gtest/gtest.h>

#include "burstpar/cost_model.hpp"
#include "burstpar/error.hpp"
#include "test_util.hpp"

namespace burstpar {
namespace {

constexpr double kMB = 1e6;
constexpr double kGB = 1e9;

NetworkProfile net(double bw, double delay) { return {bw, delay}; }

// Owner of every sample under both contiguous ceil-sized splits.
std::int64_t moved_by_sample_walk(int B, int g, int h) {
  int cg = (B + g - 1) / g, ch = (B + h - 1) / h;
  std::int64_t moved = 0;
  for (int s = 0; s < B; ++s) {
    if (s / cg != s / ch) ++moved;
  }
  return moved;
}

TEST(CommTimeTest, ZeroPayloadIsDelay) {
  EXPECT_DOUBLE_EQ(comm_time(0.0, net(600 * kGB, 10.0)), 10.0);
}

TEST(CommTimeTest, HandArithmetic) {
  // 600 MB / 600 GB/s = 1 ms = 1000 us, plus 10 us.
  EXPECT_NEAR(comm_time(600 * kMB, net(600 * kGB, 10.0)), 1010.0, 1e-9);
}

TEST(CommTimeTest, LinearAtZeroDelayAndAffine) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> p(0.0, 1e10), bw(1e8, 1e12), d(0.0, 50.0);
  for (int i = 0; i < 500; ++i) {
    NetworkProfile n0 = net(bw(rng), 0.0);
    double a = p(rng), b = p(rng);
    EXPECT_NEAR(comm_time(2 * a, n0), 2 * comm_time(a, n0), 1e-9 * comm_time(2 * a, n0) + 1e-12);
    NetworkProfile n = net(bw(rng), d(rng));
    double lhs = comm_time(a + b, n);
    double rhs = comm_time(a, n) + comm_time(b, n) - n.propagation_delay_us;
    EXPECT_NEAR(lhs, rhs, 1e-9 * lhs);
  }
}

TEST(MovedSamplesTest, MatchesSampleWalk) {
  for (int B : {1, 2, 7, 16, 32, 33, 100, 256}) {
    for (int g = 1; g <= 16; ++g) {
      for (int h = 1; h <= 16; ++h) {
        EXPECT_EQ(moved_samples(B, g, h), moved_by_sample_walk(B, g, h))
            << B << " " << g << " " << h;
      }
    }
  }
  EXPECT_EQ(moved_samples(32, 1, 2), 16);
  EXPECT_EQ(moved_samples(32, 2, 1), 16);
}

CompGraph two_layers(std::int64_t act, std::int64_t params, int batch,
                     double bw, double delay) {
  testing::GraphBuilder gb(batch, bw, delay);
  gb.layer(0, params, act, {1}, [](int b) { return 10.0 * b; })
      .layer(1, params, act, {}, [](int b) { return 10.0 * b; });
  return gb.build();
}

TEST(ActivationTransferTest, SameCountIsFree) {
  CompGraph g = two_layers(1'000'000, 0, 32, 600 * kGB, 10.0);
  for (int x : {1, 2, 4, 8}) EXPECT_EQ(activation_transfer(g, 0, 1, x, x), 0.0);
}

TEST(ActivationTransferTest, OneToTwoMovesHalf) {
  // B=32, 1 MB/sample: 16 samples (16 MB) leave device 0, both directions.
  CompGraph g = two_layers(1'000'000, 0, 32, 600 * kGB, 10.0);
  double expected = 2.0 * comm_time(16 * kMB, g.network());
  EXPECT_DOUBLE_EQ(activation_transfer(g, 0, 1, 1, 2), expected);
  EXPECT_DOUBLE_EQ(activation_transfer(g, 0, 1, 2, 1), expected);
}

TEST(ActivationTransferTest, ZeroBytesAndDisjointLayout) {
  CompGraph g = two_layers(0, 0, 32, 600 * kGB, 10.0);
  EXPECT_EQ(activation_transfer(g, 0, 1, 1, 4), 0.0);
  CompGraph h = two_layers(1000, 0, 32, 1e9, 3.0);
  EXPECT_DOUBLE_EQ(activation_transfer_disjoint(h, 0, 1),
                   2.0 * comm_time(32.0 * 1000, h.network()));
}

TEST(SyncTimeTest, Values) {
  CompGraph g = two_layers(0, 100'000'000, 32, 600 * kGB, 10.0);
  EXPECT_EQ(sync_time(g, 0, 1), 0.0);
  // 2 * 100 MB * 1/2 = 100 MB -> 166.67 us + 10 us.
  EXPECT_NEAR(sync_time(g, 0, 2), 176.6666666667, 1e-6);
  EXPECT_GT(sync_time(g, 0, 4), 0.0);
  CompGraph none = two_layers(0, 0, 32, 600 * kGB, 10.0);
  EXPECT_EQ(sync_time(none, 0, 8), 0.0);
}

TEST(SyncTimeTest, NondecreasingInParams) {
  double prev = 0.0;
  for (std::int64_t p = 0; p <= 1'000'000'000; p += 50'000'000) {
    CompGraph g = two_layers(0, p, 8, 1e10, 5.0);
    double s = sync_time(g, 0, 4);
    EXPECT_GE(s, prev);
    prev = s;
  }
}

TEST(AmplificationTest, Values) {
  EXPECT_EQ(amplification(1234.5, 1, 1234.5), 1.0);
  for (int g : {1, 2, 4, 8, 16}) EXPECT_DOUBLE_EQ(amplification(1000.0 / g, g, 1000.0), 1.0);
  EXPECT_DOUBLE_EQ(amplification(400.0, 4, 1000.0), 1.6);
  EXPECT_THROW(amplification(1.0, 1, 0.0), Error);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> t(1e-3, 1e7);
  for (int i = 0; i < 1000; ++i) {
    double c = t(rng);
    EXPECT_EQ(amplification(c, 1, c), 1.0);
  }
}

TEST(CostContextTest, CandidatesAndTables) {
  CompGraph g = two_layers(1000, 4000, 16, 1e9, 2.0);
  CostContext ctx(g, 6);
  EXPECT_EQ(ctx.candidates(), (std::vector<int>{1, 2, 4}));
  EXPECT_EQ(ctx.candidates_up_to(3), 2);
  EXPECT_EQ(ctx.round_up_index(3), 2);
  EXPECT_EQ(ctx.round_up_index(5), -1);
  for (int gi = 0; gi < ctx.num_candidates(); ++gi) {
    int x = ctx.candidate(gi);
    EXPECT_DOUBLE_EQ(ctx.comp(0, gi), profile_lookup(g, 0, x));
    EXPECT_DOUBLE_EQ(ctx.sync(0, gi), sync_time(g, 0, x));
    for (int hi = 0; hi < ctx.num_candidates(); ++hi) {
      EXPECT_DOUBLE_EQ(ctx.transfer(0, 1, gi, hi),
                       activation_transfer(g, 0, 1, x, ctx.candidate(hi)));
    }
  }
  EXPECT_THROW(CostContext(g, 4, {2, 4}), Error);
  EXPECT_THROW(CostContext(g, 4, {1, 8}), Error);
  EXPECT_THROW(CostContext(g, 4, {1, 4, 2}), Error);
  EXPECT_THROW(CostContext(g, 0), Error);
}

}  // namespace
}  // namespace burstpar
