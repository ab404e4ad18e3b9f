#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "hsgd/data.hpp"
#include "hsgd/workers.hpp"

using namespace hsgd;

namespace {

Dataset tiny_dataset(std::size_t n, std::size_t d, std::size_t c, std::uint64_t seed) {
  RngStream s(seed, 0);
  std::vector<double> x;
  std::vector<std::uint32_t> y;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t q = 0; q < d; ++q) x.push_back(s.normal());
    y.push_back(static_cast<std::uint32_t>(i % c));
  }
  return Dataset(d, c, std::move(x), std::move(y));
}

}  // namespace

TEST(DeriveTauS, KnownRatios) {
  EXPECT_EQ(derive_tau_s(32, 2.0), 16u);
  EXPECT_EQ(derive_tau_s(32, 33.0), 1u);
  EXPECT_EQ(derive_tau_s(32, 1.0), 32u);
  EXPECT_EQ(derive_tau_s(32, 8.0), 4u);
  EXPECT_EQ(derive_tau_s(32, 1000.0), 1u);
  EXPECT_EQ(derive_tau_s(32, 33.62), 1u);
  // round half up
  EXPECT_EQ(derive_tau_s(3, 2.0), 2u);
}

TEST(DeriveTauS, RejectsInvalid) {
  EXPECT_THROW(derive_tau_s(0, 2.0), Error);
  EXPECT_THROW(derive_tau_s(32, 0.5), Error);
  EXPECT_THROW(derive_tau_s(32, std::nan("")), Error);
}

TEST(MeasureAlpha, Examples) {
  const std::vector<double> fast{0.1940}, slow{6.5230};
  EXPECT_NEAR(measure_alpha(fast, slow), 33.62, 0.005);
  const std::vector<double> eq{0.5, 0.5};
  EXPECT_DOUBLE_EQ(measure_alpha(eq, eq), 1.0);
  const std::vector<double> f2{0.1, 0.3}, s2{0.4, 0.4};
  EXPECT_DOUBLE_EQ(measure_alpha(f2, s2), 2.0);
  EXPECT_THROW(measure_alpha({}, s2), Error);
  const std::vector<double> zero{0.0};
  EXPECT_THROW(measure_alpha(zero, s2), Error);
}

TEST(SystemProfile, DerivesTauSAndChecksInputs) {
  const SystemProfile p(32.0, 1, 1, 2.0, 32);
  EXPECT_EQ(p.tau_s(), 1u);
  EXPECT_EQ(p.workers(), 2u);
  EXPECT_THROW(SystemProfile(32.0, 0, 1, 2.0, 32), Error);
  EXPECT_THROW(SystemProfile(0.5, 1, 1, 2.0, 32), Error);
  EXPECT_THROW(SystemProfile(32.0, 1, 1, 0.5, 32), Error);
  const SystemProfile u(32.0, 1, 1, 0.5, 32, SamplerMode::kUniform);
  EXPECT_EQ(u.lambda(), 1.0);
}

TEST(WorkerSpec, Validate) {
  WorkerSpec w{0, WorkerClass::kFast, 4, 0.2, 8};
  EXPECT_NO_THROW(w.validate());
  w.tau = 0;
  EXPECT_THROW(w.validate(), Error);
  w.tau = 4;
  w.iter_cost = -1.0;
  EXPECT_THROW(w.validate(), Error);
  w.iter_cost = 0.2;
  w.batch_size = 0;
  EXPECT_THROW(w.validate(), Error);
}

TEST(LrSchedule, Multistep) {
  LrSchedule s{LrKind::kMultistep, 0.1, {60, 80}, 0.1, 0};
  EXPECT_DOUBLE_EQ(lr_at(s, 0), 0.1);
  EXPECT_DOUBLE_EQ(lr_at(s, 59), 0.1);
  EXPECT_NEAR(lr_at(s, 60), 0.01, 1e-15);
  EXPECT_NEAR(lr_at(s, 70), 0.01, 1e-15);
  EXPECT_NEAR(lr_at(s, 80), 0.001, 1e-15);
}

TEST(LrSchedule, Cosine) {
  LrSchedule s{LrKind::kCosine, 0.4, {}, 0.1, 100};
  EXPECT_DOUBLE_EQ(lr_at(s, 0), 0.4);
  EXPECT_NEAR(lr_at(s, 50), 0.2, 1e-12);
  EXPECT_GT(lr_at(s, 99), 0.0);
  EXPECT_THROW(lr_at(s, 100), Error);
}

TEST(LrSchedule, RejectsBadSchedules) {
  EXPECT_THROW(lr_at(LrSchedule{LrKind::kConstant, 0.0, {}, 0.1, 0}, 0), Error);
  EXPECT_THROW(lr_at(LrSchedule{LrKind::kMultistep, 0.1, {80, 60}, 0.1, 0}, 0), Error);
  EXPECT_THROW(lr_at(LrSchedule{LrKind::kMultistep, 0.1, {60}, 0.0, 0}, 0), Error);
  EXPECT_THROW(lr_at(LrSchedule{LrKind::kCosine, 0.1, {}, 0.1, 0}, 0), Error);
}

TEST(LocalTrain, SingleFullBatchStep) {
  const auto data = tiny_dataset(6, 3, 2, 1);
  const auto spec = ModelSpec::logistic_regression(3, 2);
  RngStream init(1, 1);
  const auto start = init_params(spec, init);
  const std::vector<std::size_t> assigned{0, 1, 2, 3, 4, 5};
  RngStream s(1, 2);
  const auto r = local_train(spec, data, start, assigned, 1, 0.3, 6, s);
  // the batch is a permutation of the assignment; the mean gradient only
  // differs by summation order
  const auto expected = axpy(-0.3, backward(spec, start, data.gather(assigned)), start);
  for (std::size_t k = 0; k < start.size(); ++k) EXPECT_NEAR(r.end_params[k], expected[k], 1e-15);
  EXPECT_EQ(r.steps, 1u);
  EXPECT_EQ(r.loss_records.size(), 6u);
}

TEST(LocalTrain, ZeroLrKeepsParamsButRecordsLosses) {
  const auto data = tiny_dataset(10, 2, 3, 2);
  const auto spec = ModelSpec::mlp2(2, 3, 3);
  RngStream init(2, 1);
  const auto start = init_params(spec, init);
  const std::vector<std::size_t> assigned{1, 3, 5, 7, 9};
  RngStream s(2, 2);
  const auto r = local_train(spec, data, start, assigned, 4, 0.0, 2, s);
  EXPECT_EQ(r.end_params, start);
  EXPECT_EQ(r.loss_records.size(), 8u);
  for (const auto& [id, loss] : r.loss_records) {
    EXPECT_TRUE(std::find(assigned.begin(), assigned.end(), id) != assigned.end());
    EXPECT_GT(loss, 0.0);
  }
}

TEST(LocalTrain, MatchesUnrolledSteps) {
  // Reconstruct each mini-batch from the recorded sample ids and replay the
  // updates by hand.
  const auto data = tiny_dataset(12, 3, 3, 3);
  const auto spec = ModelSpec::mlp2(3, 4, 3);
  RngStream init(3, 1);
  const auto start = init_params(spec, init);
  const std::vector<std::size_t> assigned{0, 2, 4, 6, 8, 10, 11};
  RngStream s(3, 2);
  const std::size_t tau = 3, bs = 3;
  const double lr = 0.25;
  const auto r = local_train(spec, data, start, assigned, tau, lr, bs, s);
  ASSERT_EQ(r.loss_records.size(), tau * bs);

  ParamVector w = start;
  for (std::size_t step = 0; step < tau; ++step) {
    std::vector<std::size_t> ids;
    for (std::size_t j = 0; j < bs; ++j) ids.push_back(r.loss_records[step * bs + j].first);
    std::set<std::size_t> distinct(ids.begin(), ids.end());
    EXPECT_EQ(distinct.size(), bs);
    const auto batch = data.gather(ids);
    const auto losses = forward_loss(spec, w, batch).per_sample;
    for (std::size_t j = 0; j < bs; ++j) EXPECT_EQ(r.loss_records[step * bs + j].second, losses[j]);
    w = axpy(-lr, backward(spec, w, batch), w);
  }
  EXPECT_EQ(r.end_params, w);
}

TEST(LocalTrain, FirstPassCoversAssignmentWithoutRepeats) {
  const auto data = tiny_dataset(20, 2, 2, 4);
  const auto spec = ModelSpec::logistic_regression(2, 2);
  const std::vector<std::size_t> assigned{0, 1, 2, 3, 4, 5, 6, 7};
  RngStream s(4, 0);
  const auto r = local_train(spec, data, ParamVector(6), assigned, 4, 0.1, 2, s);
  std::set<std::size_t> seen;
  for (const auto& rec : r.loss_records) seen.insert(rec.first);
  EXPECT_EQ(seen.size(), 8u);
}

TEST(LocalTrain, BatchClampedToAssignment) {
  const auto data = tiny_dataset(5, 2, 2, 5);
  const auto spec = ModelSpec::logistic_regression(2, 2);
  const std::vector<std::size_t> assigned{4, 2};
  RngStream s(5, 0);
  const auto r = local_train(spec, data, ParamVector(6), assigned, 3, 0.1, 32, s);
  EXPECT_EQ(r.loss_records.size(), 6u);
}

TEST(LocalTrain, WeightDecayAddsL2Term) {
  const auto data = tiny_dataset(4, 2, 2, 6);
  const auto spec = ModelSpec::logistic_regression(2, 2);
  RngStream init(6, 1);
  const auto start = init_params(spec, init);
  const std::vector<std::size_t> assigned{0, 1, 2, 3};
  RngStream s(6, 2);
  const auto r = local_train(spec, data, start, assigned, 1, 0.5, 4, s, {0.01});
  const auto g = backward(spec, start, data.gather(assigned));
  for (std::size_t k = 0; k < start.size(); ++k) {
    EXPECT_NEAR(r.end_params[k], start[k] - 0.5 * (g[k] + 0.01 * start[k]), 1e-15);
  }
}

TEST(LocalTrain, RejectsBadArguments) {
  const auto data = tiny_dataset(4, 2, 2, 7);
  const auto spec = ModelSpec::logistic_regression(2, 2);
  const std::vector<std::size_t> assigned{0, 1};
  RngStream s(7, 0);
  EXPECT_THROW(local_train(spec, data, ParamVector(6), {}, 1, 0.1, 2, s), Error);
  EXPECT_THROW(local_train(spec, data, ParamVector(6), assigned, 0, 0.1, 2, s), Error);
  EXPECT_THROW(local_train(spec, data, ParamVector(6), assigned, 1, -0.1, 2, s), Error);
  EXPECT_THROW(local_train(spec, data, ParamVector(6), assigned, 1, 0.1, 0, s), Error);
  EXPECT_THROW(local_train(spec, data, ParamVector(5), assigned, 1, 0.1, 2, s), Error);
  const std::vector<std::size_t> out_of_range{0, 9};
  EXPECT_THROW(local_train(spec, data, ParamVector(6), out_of_range, 1, 0.1, 2, s), Error);
}

TEST(LocalTrain, SameStreamSameResult) {
  const auto data = tiny_dataset(30, 3, 3, 8);
  const auto spec = ModelSpec::mlp2(3, 5, 3);
  RngStream init(8, 1);
  const auto start = init_params(spec, init);
  std::vector<std::size_t> assigned(30);
  for (std::size_t i = 0; i < 30; ++i) assigned[i] = i;
  RngStream a(8, 2), b(8, 2);
  const auto ra = local_train(spec, data, start, assigned, 7, 0.1, 4, a);
  const auto rb = local_train(spec, data, start, assigned, 7, 0.1, 4, b);
  EXPECT_EQ(ra.end_params, rb.end_params);
  EXPECT_EQ(ra.loss_records, rb.loss_records);
}
