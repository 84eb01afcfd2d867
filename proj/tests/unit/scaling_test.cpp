// Copyright 2026 The burstpar Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "burstpar/error.hpp"
#include "burstpar/scaling.hpp"
#include "burstpar/synth.hpp"
#include "test_util.hpp"

namespace burstpar {
namespace {

constexpr double kTbps = 125e9;
constexpr double kTenGbps = 1.25e9;

CompGraph two_layer(std::int64_t params, int max_batch = 1024) {
  testing::GraphBuilder gb(max_batch);
  gb.layer(0, params, 10, {1}, [](int b) { return 100.0 + 3.0 * b; })
      .layer(1, params, 10, {}, [](int b) { return 50.0 + 1.0 * b; });
  return gb.build();
}

TEST(CurveTest, LogLogInterpolationByHand) {
  SampleEfficiencyCurve c{0.3, {{100, 1000.0}, {400, 250.0}}};
  EXPECT_DOUBLE_EQ(c.steps_at(100), 1000.0);
  // Slope -1 in log-log: steps * batch is constant.
  EXPECT_NEAR(c.steps_at(200), 500.0, 1e-9);
  EXPECT_THROW(c.steps_at(99), Error);
  EXPECT_THROW(c.steps_at(401), Error);
}

TEST(CurveTest, Validation) {
  EXPECT_THROW((SampleEfficiencyCurve{0.3, {{100, 10.0}, {100, 5.0}}}.validate()), Error);
  EXPECT_THROW((SampleEfficiencyCurve{0.3, {{100, 10.0}, {200, 11.0}}}.validate()), Error);
  EXPECT_THROW((SampleEfficiencyCurve{0.3, {}}.validate()), Error);
  nlohmann::json bad = {{"target_error", 0.3}};
  try {
    curve_from_json(bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kParse);
  }
}

TEST(CurveTest, SyntheticFamilyAndRoundTrip) {
  SampleEfficiencyCurve c = synthetic_curve(1500.0, 2048.0, 16, 1024);
  ASSERT_EQ(c.points.size(), 7u);
  for (const auto& [b, s] : c.points) {
    EXPECT_EQ(s, std::ceil(1500.0 * 2048.0 / static_cast<double>(b) + 1500.0));
  }
  SampleEfficiencyCurve back = curve_from_json(curve_to_json(c));
  EXPECT_EQ(back.points, c.points);
  EXPECT_EQ(back.target_error, c.target_error);
}

TEST(IterationTimeTest, OneGpuIsComputeOnly) {
  CompGraph g = two_layer(4'000'000);
  double t = iteration_time(g, 1, 64, g.network());
  EXPECT_DOUBLE_EQ(t, (100.0 + 3.0 * 64) + (50.0 + 64.0));
}

TEST(IterationTimeTest, TwoGpusByHand) {
  CompGraph g = two_layer(4'000'000);
  NetworkProfile net{1e9, 0.0};
  // b = 32: 196 + 82 us compute; each layer syncs 2 * 4 MB * 1/2 = 4 MB at
  // 1 GB/s = 4000 us.
  EXPECT_NEAR(iteration_time(g, 2, 64, net), 196.0 + 82.0 + 2 * 4000.0, 1e-9);
  // ceil(63 / 2) = 32 as well.
  EXPECT_NEAR(iteration_time(g, 2, 63, net), 196.0 + 82.0 + 2 * 4000.0, 1e-9);
}

TEST(IterationTimeTest, NonincreasingInBandwidth) {
  CompGraph g = generate_model("vgg_like");
  double prev = INFINITY;
  for (double bw = 1e8; bw <= 1e13; bw *= 3) {
    double t = iteration_time(g, 8, 256, NetworkProfile{bw, 5.0});
    EXPECT_LE(t, prev);
    prev = t;
  }
}

TEST(IterationTimeTest, ProfileCoverageIsChecked) {
  CompGraph g = two_layer(0, 64);
  EXPECT_TRUE(profile_covers(g, 1, 64));
  EXPECT_FALSE(profile_covers(g, 1, 128));
  EXPECT_THROW(iteration_time(g, 1, 128, g.network()), Error);
}

TEST(EstimateTest, OneGpuCoincidesWhenBaseIsOptimal) {
  // Linear compute: tta(B) is proportional to steps(B) * B, smallest at 256.
  testing::GraphBuilder gb(1024);
  gb.layer(0, 1000, 10, {}, [](int b) { return 2.0 * b; });
  CompGraph g = gb.build();
  SampleEfficiencyCurve c{0.3, {{128, 2100.0}, {256, 1000.0}, {512, 900.0}}};
  for (Strategy s : {Strategy::kWeak, Strategy::kStrong, Strategy::kBatchOptimal}) {
    ScalingEstimate e = estimate(s, g, c, 1, g.network(), 256);
    EXPECT_EQ(e.chosen_global_batch, 256);
    EXPECT_EQ(e.speedup_vs_1gpu, 1.0);
  }
}

TEST(EstimateTest, GridContents) {
  SampleEfficiencyCurve c{0.3, {{16, 100.0}, {64, 50.0}, {256, 40.0}}};
  EXPECT_EQ(batch_grid(c, 4, 32), (std::vector<std::int64_t>{16, 32, 64, 128, 256}));
  // base * n outside the domain is dropped.
  EXPECT_EQ(batch_grid(c, 16, 32), (std::vector<std::int64_t>{16, 32, 64, 128, 256}));
}

TEST(EstimateTest, StructuralProperties) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    testing::GraphBuilder gb(64, 1e9, 2.0);
    const int n = 1 + trial % 5;
    for (int i = 0; i < n; ++i) {
      gb.layer(i, testing::random_bytes(rng, 100'000'000), 0,
               i + 1 < n ? std::vector<int>{i + 1} : std::vector<int>{},
               testing::random_time(rng, 64));
    }
    CompGraph g = gb.build();
    std::vector<std::pair<std::int64_t, double>> pts;
    double steps = 5000.0 + 1000.0 * trial;
    for (std::int64_t b = 1; b <= 64; b *= 2) {
      pts.emplace_back(b, steps);
      steps *= std::uniform_real_distribution<double>(0.5, 1.0)(rng);
    }
    SampleEfficiencyCurve c{0.1, pts};
    NetworkProfile net{std::pow(10.0, std::uniform_real_distribution<double>(8, 12)(rng)), 2.0};
    std::vector<int> counts{1, 2, 4, 8};
    auto weak = speedup_curve(Strategy::kWeak, g, c, {1, 2, 4}, net, 16);
    auto strong = speedup_curve(Strategy::kStrong, g, c, counts, net, 16);
    auto opt = speedup_curve(Strategy::kBatchOptimal, g, c, counts, net, 16);
    for (std::size_t i = 0; i < counts.size(); ++i) {
      EXPECT_LE(opt[i].time_to_accuracy_s, strong[i].time_to_accuracy_s);
      if (i < weak.size()) {
        EXPECT_LE(opt[i].time_to_accuracy_s, weak[i].time_to_accuracy_s);
        EXPECT_EQ(weak[i].per_gpu_batch, 16.0);
      }
      EXPECT_EQ(strong[i].chosen_global_batch, 16);
      EXPECT_EQ(strong[i].steps, c.steps_at(16));
      EXPECT_GE(opt[i].speedup_vs_1gpu, 0.0);
    }
    EXPECT_EQ(weak[0].speedup_vs_1gpu, 1.0);
    EXPECT_EQ(strong[0].speedup_vs_1gpu, 1.0);
  }
}

TEST(EstimateTest, SingleRowCurve) {
  CompGraph g = two_layer(1000);
  auto rows = speedup_curve(Strategy::kStrong, g, synthetic_curve(), {1}, g.network(), 256);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].speedup_vs_1gpu, 1.0);
  std::string csv = estimates_to_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "n_gpus,strategy,batch,iter_us,steps,tta_s,speedup");
  EXPECT_NE(csv.find("\n1,strong,256,"), std::string::npos);
}

TEST(EstimateTest, DomainExhausted) {
  CompGraph g = two_layer(1000, 64);
  SampleEfficiencyCurve c{0.3, {{512, 10.0}, {1024, 5.0}}};
  // Neither the curve base nor any grid batch fits a 64-sample profile on 1 GPU.
  EXPECT_THROW(estimate(Strategy::kBatchOptimal, g, c, 1, g.network(), 512), Error);
  EXPECT_THROW(estimate(Strategy::kWeak, g, c, 1, g.network(), 2048), Error);
}

class SyntheticVgg : public ::testing::Test {
 protected:
  static CompGraph model() {
    SynthOptions o;
    o.depth = 11;
    o.global_batch = 256;
    return generate_model("vgg_like", o);
  }
  const std::vector<int> counts_{1, 2, 4, 8, 16, 32, 64, 128, 256};
};

TEST_F(SyntheticVgg, WeakScalingPlateaus) {
  auto weak = speedup_curve(Strategy::kWeak, model(), synthetic_curve(), {64, 256},
                            NetworkProfile{kTbps, 5.0}, 256);
  EXPECT_LT(weak[1].speedup_vs_1gpu / weak[0].speedup_vs_1gpu, 1.2);
}

TEST_F(SyntheticVgg, FastNetworksFavourStrongScaling) {
  CompGraph g = model();
  auto c = synthetic_curve();
  for (int n : {64, 128, 256}) {
    NetworkProfile fast{kTbps, 5.0}, slow{kTenGbps, 5.0};
    EXPECT_GT(estimate(Strategy::kStrong, g, c, n, fast, 256).speedup_vs_1gpu,
              estimate(Strategy::kWeak, g, c, n, fast, 256).speedup_vs_1gpu);
    EXPECT_LT(estimate(Strategy::kStrong, g, c, n, slow, 256).speedup_vs_1gpu,
              estimate(Strategy::kWeak, g, c, n, slow, 256).speedup_vs_1gpu);
  }
}

TEST_F(SyntheticVgg, BatchOptimalPerGpuBatchShrinks) {
  auto rows = speedup_curve(Strategy::kBatchOptimal, model(), synthetic_curve(), counts_,
                            NetworkProfile{600e9, 5.0}, 256);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_LE(rows[i].per_gpu_batch, rows[i - 1].per_gpu_batch) << rows[i].n_gpus;
  }
}

}  // namespace
}  // namespace burstpar
