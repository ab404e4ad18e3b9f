#include <gtest/gtest.h>

#include "hsgd/simclock.hpp"

using namespace hsgd;

namespace {

constexpr double kFast = 0.1940;
constexpr double kSlow = 6.5230;

std::vector<WorkerSpec> pair_of(std::size_t tau_s, double cost_s, std::size_t tau_f, double cost_f) {
  return {WorkerSpec{0, WorkerClass::kSlow, tau_s, cost_s, 1},
          WorkerSpec{1, WorkerClass::kFast, tau_f, cost_f, 1}};
}

}  // namespace

TEST(RoundTiming, ImperfectIntegerTau) {
  const auto t = round_timing(pair_of(1, kSlow, 32, kFast), CostModel{});
  EXPECT_NEAR(t.compute_time[0], 6.523, 1e-12);
  EXPECT_NEAR(t.compute_time[1], 6.208, 1e-12);
  EXPECT_NEAR(t.blocking_time[1], 0.315, 1e-12);
  EXPECT_EQ(t.blocking_time[0], 0.0);
  EXPECT_NEAR(t.round_wall, 6.523, 1e-12);
  EXPECT_EQ(t.agg_count, 1u);
}

TEST(RoundTiming, BalancedLocalBlocking) {
  const auto t = round_timing(pair_of(32, kSlow, 32, kFast), CostModel{});
  EXPECT_NEAR(t.blocking_time[1], 32.0 * (kSlow - kFast), 1e-9);
  EXPECT_NEAR(t.blocking_time[1], 202.528, 1e-6);
}

TEST(RoundTiming, ExactRatioRemovesBlocking) {
  RngStream s(60, 0);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t tau_s = 1 + s.uniform_below(16);
    const std::size_t alpha = 1 + s.uniform_below(32);
    const double c = s.uniform(0.01, 2.0);
    std::vector<WorkerSpec> ws;
    const std::size_t ps = 1 + s.uniform_below(3), pf = 1 + s.uniform_below(5);
    for (std::size_t i = 0; i < ps; ++i) ws.push_back({i, WorkerClass::kSlow, tau_s, alpha * c, 1});
    for (std::size_t i = 0; i < pf; ++i)
      ws.push_back({ps + i, WorkerClass::kFast, tau_s * alpha, c, 1});
    const auto t = round_timing(ws, CostModel{c, alpha * c, 0.0});
    for (double b : t.blocking_time) EXPECT_LE(b, 1e-9);
  }
}

TEST(RoundTiming, AggregationCostAddsToWall) {
  const auto t = round_timing(pair_of(1, 2.0, 2, 1.0), CostModel{1.0, 2.0, 0.5});
  EXPECT_DOUBLE_EQ(t.round_wall, 2.5);
  EXPECT_DOUBLE_EQ(t.blocking_time[1], 0.0);
}

TEST(RoundTiming, RejectsBadInputs) {
  EXPECT_THROW(round_timing({}, CostModel{}), Error);
  EXPECT_THROW(round_timing(pair_of(0, 1.0, 1, 1.0), CostModel{}), Error);
  EXPECT_THROW(CostModel({1.0, 0.5, 0.0}).validate(), Error);
  EXPECT_THROW(CostModel({0.0, 0.5, 0.0}).validate(), Error);
  EXPECT_THROW(CostModel({1.0, 2.0, -1.0}).validate(), Error);
}

TEST(Timeline, SingleWorkerWall) {
  const std::vector<WorkerSpec> one{{0, WorkerClass::kFast, 5, 0.25, 1}};
  const auto t = run_timeline(8, one, CostModel{0.25, 0.25, 0.0});
  EXPECT_DOUBLE_EQ(t.total_wall, 8 * 5 * 0.25);
  EXPECT_EQ(t.total_agg_count, 8u);
}

TEST(Timeline, ComputeIsLinearInCost) {
  const auto base = run_timeline(10, pair_of(3, 1.5, 7, 0.3), CostModel{0.3, 1.5, 0.0});
  const auto doubled = run_timeline(10, pair_of(3, 3.0, 7, 0.6), CostModel{0.6, 3.0, 0.0});
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(doubled.total_compute[i], 2.0 * base.total_compute[i]);
  }
}

TEST(Timeline, LocalSgdAggregatesOncePerTauSteps) {
  // U fast updates: sync SGD aggregates after every step, local SGD every 32.
  const std::size_t updates = 32 * 50;
  const auto sync = run_timeline(updates, pair_of(1, kSlow, 1, kFast), CostModel{});
  const auto local = run_timeline(updates / 32, pair_of(1, kSlow, 32, kFast), CostModel{});
  EXPECT_EQ(sync.total_agg_count, updates);
  EXPECT_EQ(local.total_agg_count * 32, sync.total_agg_count);
  // same fast-worker work, far less waiting on the slow worker
  EXPECT_NEAR(local.total_compute[1], sync.total_compute[1], 1e-9);
  EXPECT_LT(local.total_wall, sync.total_wall);
  EXPECT_NEAR(sync.total_wall / local.total_wall, 32.0, 1e-9);
}

TEST(SimClock, AccumulatesAcrossRounds) {
  SimClock clock(CostModel{});
  const auto ws = pair_of(1, kSlow, 32, kFast);
  double prev = 0.0;
  for (int r = 1; r <= 5; ++r) {
    clock.advance(ws);
    EXPECT_GT(clock.wall(), prev);
    prev = clock.wall();
    EXPECT_EQ(clock.agg_count(), static_cast<std::size_t>(r));
    EXPECT_NEAR(clock.blocking_total(), 0.315 * r, 1e-9);
  }
  EXPECT_NEAR(clock.wall(), 5 * kSlow, 1e-9);
  EXPECT_NEAR(clock.last().round_wall, kSlow, 1e-12);
}
