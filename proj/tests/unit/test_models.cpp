#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "hsgd/models.hpp"

using namespace hsgd;

namespace {

Batch random_batch(RngStream& s, std::size_t d, std::size_t c, std::size_t b) {
  Batch batch;
  batch.input_dim = d;
  for (std::size_t j = 0; j < b; ++j) {
    for (std::size_t q = 0; q < d; ++q) batch.features.push_back(s.normal());
    batch.labels.push_back(static_cast<std::uint32_t>(s.uniform_below(c)));
    batch.sample_ids.push_back(j);
  }
  return batch;
}

// Naive long double forward pass written against the documented layout.
long double oracle_loss(const ModelSpec& spec, const ParamVector& p, std::span<const double> x,
                        std::size_t label) {
  const std::size_t d = spec.input_dim, c = spec.num_classes, h = spec.hidden_dim;
  std::vector<long double> input(x.begin(), x.end());
  std::size_t off = 0;
  if (spec.kind == ModelKind::kMlp2) {
    std::vector<long double> hidden(h);
    for (std::size_t m = 0; m < h; ++m) {
      long double z = p[h * d + m];
      for (std::size_t q = 0; q < d; ++q) z += p[m * d + q] * input[q];
      hidden[m] = z > 0 ? z : 0;
    }
    input = hidden;
    off = h * d + h;
  }
  const std::size_t in = input.size();
  std::vector<long double> z(c);
  for (std::size_t k = 0; k < c; ++k) {
    z[k] = p[off + c * in + k];
    for (std::size_t q = 0; q < in; ++q) z[k] += p[off + k * in + q] * input[q];
  }
  long double denom = 0;
  for (auto v : z) denom += std::exp(v);
  return std::log(denom) - z[label];
}

ModelSpec random_spec(RngStream& s, bool mlp) {
  const std::size_t d = 1 + s.uniform_below(5), c = 2 + s.uniform_below(4);
  return mlp ? ModelSpec::mlp2(d, 1 + s.uniform_below(6), c) : ModelSpec::logistic_regression(d, c);
}

}  // namespace

TEST(ModelSpec, ParamCounts) {
  EXPECT_EQ(ModelSpec::logistic_regression(3, 2).param_count(), 8u);
  EXPECT_EQ(ModelSpec::mlp2(4, 5, 3).param_count(), 43u);
}

TEST(ModelSpec, RejectsDegenerateShapes) {
  EXPECT_THROW(ModelSpec::logistic_regression(0, 2), Error);
  EXPECT_THROW(ModelSpec::logistic_regression(3, 1), Error);
  EXPECT_THROW(ModelSpec::mlp2(3, 0, 2), Error);
}

TEST(InitParams, Deterministic) {
  const auto spec = ModelSpec::mlp2(4, 5, 3);
  RngStream a(11, 0), b(11, 0), c(12, 0);
  const auto pa = init_params(spec, a);
  EXPECT_EQ(pa, init_params(spec, b));
  EXPECT_NE(pa, init_params(spec, c));
  EXPECT_EQ(pa.size(), 43u);
  // biases start at zero, weights inside +-1/sqrt(fan_in)
  for (std::size_t m = 0; m < 5; ++m) EXPECT_EQ(pa[20 + m], 0.0);
  for (std::size_t k = 0; k < 20; ++k) EXPECT_LE(std::abs(pa[k]), 0.5);
}

TEST(ForwardLoss, ZeroParamsGiveLogC) {
  RngStream s(1, 0);
  for (std::size_t c = 2; c <= 6; ++c) {
    const auto spec = ModelSpec::logistic_regression(3, c);
    const auto batch = random_batch(s, 3, c, 9);
    const auto r = forward_loss(spec, ParamVector(spec.param_count()), batch);
    for (double l : r.per_sample) EXPECT_NEAR(l, std::log(static_cast<double>(c)), 1e-12);
  }
}

TEST(ForwardLoss, SingletonMeanEqualsSample) {
  RngStream s(2, 0);
  const auto spec = ModelSpec::mlp2(3, 4, 3);
  const auto p = init_params(spec, s);
  const auto r = forward_loss(spec, p, random_batch(s, 3, 3, 1));
  EXPECT_EQ(r.mean_loss, r.per_sample[0]);
}

TEST(ForwardLoss, MatchesPerSampleOracle) {
  RngStream s(3, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const auto spec = random_spec(s, trial % 2 == 0);
    auto p = init_params(spec, s);
    for (auto& v : p.values()) v += 0.3 * s.normal();
    const auto batch = random_batch(s, spec.input_dim, spec.num_classes, 8);
    const auto r = forward_loss(spec, p, batch);
    long double mean = 0;
    for (std::size_t j = 0; j < 8; ++j) {
      const auto expected = oracle_loss(spec, p, batch.row(j), batch.labels[j]);
      EXPECT_NEAR(r.per_sample[j], static_cast<double>(expected), 1e-12);
      mean += expected;
    }
    EXPECT_NEAR(r.mean_loss, static_cast<double>(mean / 8), 1e-12);
  }
}

TEST(ForwardLoss, RejectsMismatches) {
  RngStream s(4, 0);
  const auto spec = ModelSpec::logistic_regression(3, 2);
  const auto batch = random_batch(s, 3, 2, 4);
  EXPECT_THROW(forward_loss(spec, ParamVector(7), batch), Error);
  auto wrong_dim = random_batch(s, 4, 2, 4);
  EXPECT_THROW(forward_loss(spec, ParamVector(8), wrong_dim), Error);
  auto bad_label = batch;
  bad_label.labels[0] = 2;
  EXPECT_THROW(forward_loss(spec, ParamVector(8), bad_label), Error);
  Batch empty;
  empty.input_dim = 3;
  EXPECT_THROW(forward_loss(spec, ParamVector(8), empty), Error);
  ParamVector huge(8);
  huge[0] = 1e308;
  huge[1] = 1e308;
  huge[2] = 1e308;
  Batch big = batch;
  for (auto& f : big.features) f = 1e308;
  EXPECT_THROW(forward_loss(spec, huge, big), Error);
}

TEST(Backward, MatchesFiniteDifferencesBothDirections) {
  RngStream s(5, 0);
  for (int trial = 0; trial < 100; ++trial) {
    const auto spec = random_spec(s, trial % 2 == 1);
    auto p = init_params(spec, s);
    for (auto& v : p.values()) v += 0.2 * s.normal();
    const auto batch = random_batch(s, spec.input_dim, spec.num_classes, 1 + s.uniform_below(8));
    const auto analytic = backward(spec, p, batch);
    const auto numeric = finite_diff_grad(spec, p, batch, 1e-5);
    const auto skip = kink_adjacent_coordinates(spec, p, batch, 1e-5);
    EXPECT_LT(max_relative_error(analytic, numeric, skip), 1e-4);
    EXPECT_LT(max_relative_error(numeric, analytic, skip), 1e-4);
  }
}

TEST(Backward, GradientCheckSuite) {
  const auto report = gradient_check(100, 3);
  EXPECT_EQ(report.instances, 100u);
  EXPECT_GT(report.coordinates_checked, 1000u);
  EXPECT_LT(report.max_relative_error, 1e-4);
}

TEST(Backward, LossAndGradientAgree) {
  RngStream s(6, 0);
  const auto spec = ModelSpec::mlp2(3, 4, 3);
  const auto p = init_params(spec, s);
  const auto batch = random_batch(s, 3, 3, 5);
  const auto both = loss_and_gradient(spec, p, batch);
  const auto fwd = forward_loss(spec, p, batch);
  EXPECT_EQ(both.gradient, backward(spec, p, batch));
  EXPECT_EQ(both.per_sample, fwd.per_sample);
  EXPECT_DOUBLE_EQ(both.mean_loss, fwd.mean_loss);
}

TEST(Backward, DuplicatedBatchSameGradient) {
  RngStream s(7, 0);
  const auto spec = ModelSpec::mlp2(3, 4, 3);
  const auto p = init_params(spec, s);
  const auto batch = random_batch(s, 3, 3, 6);
  Batch doubled = batch;
  doubled.features.insert(doubled.features.end(), batch.features.begin(), batch.features.end());
  doubled.labels.insert(doubled.labels.end(), batch.labels.begin(), batch.labels.end());
  doubled.sample_ids.insert(doubled.sample_ids.end(), batch.sample_ids.begin(),
                            batch.sample_ids.end());
  const auto g1 = backward(spec, p, batch), g2 = backward(spec, p, doubled);
  for (std::size_t k = 0; k < g1.size(); ++k) EXPECT_NEAR(g1[k], g2[k], 1e-15);
}

TEST(Backward, VanishesAfterConvergenceOnSeparableToy) {
  // Two well separated points per class; plain full-batch gradient descent
  // drives the loss (and with it the gradient) towards zero.
  const auto spec = ModelSpec::mlp2(2, 4, 2);
  Batch batch;
  batch.input_dim = 2;
  batch.features = {2.0, 1.0, 1.5, 2.0, -2.0, -1.0, -1.5, -2.0};
  batch.labels = {0, 0, 1, 1};
  batch.sample_ids = {0, 1, 2, 3};
  RngStream s(8, 0);
  auto p = init_params(spec, s);
  double gnorm = 1.0;
  for (int step = 0; step < 400000 && gnorm >= 1e-6; ++step) {
    const auto g = backward(spec, p, batch);
    gnorm = g.norm();
    p = axpy(-2.0, g, p);
  }
  EXPECT_LT(gnorm, 1e-6);
  EXPECT_EQ(accuracy(spec, p, batch), 1.0);
}

TEST(FiniteDiff, QuadraticIsExact) {
  // f(p) = 0.5 p'Ap + b'p has gradient Ap + b; central differences carry no
  // truncation error on quadratics, only rounding.
  const std::vector<std::vector<double>> a{{3.0, 1.0, 0.5}, {1.0, 2.0, -0.25}, {0.5, -0.25, 4.0}};
  const std::vector<double> b{0.3, -1.2, 2.0};
  auto f = [&](const ParamVector& p) {
    double v = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
      v += b[i] * p[i];
      for (std::size_t j = 0; j < 3; ++j) v += 0.5 * a[i][j] * p[i] * p[j];
    }
    return v;
  };
  const ParamVector p{0.7, -1.1, 0.4};
  for (double h : {1e-1, 1e-2, 1e-3}) {
    const auto g = finite_diff_grad(f, p, h);
    for (std::size_t i = 0; i < 3; ++i) {
      double exact = b[i];
      for (std::size_t j = 0; j < 3; ++j) exact += a[i][j] * p[j];
      EXPECT_NEAR(g[i], exact, 1e-10 / h);
    }
  }
}

TEST(FiniteDiff, RejectsDegenerateStep) {
  const auto spec = ModelSpec::logistic_regression(2, 2);
  RngStream s(9, 0);
  const auto batch = random_batch(s, 2, 2, 3);
  const ParamVector p(6);
  EXPECT_THROW(finite_diff_grad(spec, p, batch, 0.0), Error);
  EXPECT_THROW(finite_diff_grad(spec, p, batch, -1e-5), Error);
  EXPECT_THROW(finite_diff_grad(spec, p, batch, std::nan("")), Error);
}

TEST(KinkMask, FlagsExactKinkOnly) {
  // hidden unit 0 has pre-activation exactly 0 for the single input.
  const auto spec = ModelSpec::mlp2(1, 2, 2);
  ParamVector p(spec.param_count());
  p[0] = 1.0;   // W1[0][0]
  p[1] = 1.0;   // W1[1][0]
  p[2] = -1.0;  // b1[0] -> z0 = 0
  p[3] = 0.5;   // b1[1] -> z1 = 1.5
  p[4] = 1.0;   // W2
  Batch batch{1, {1.0}, {0}, {0}};
  const auto skip = kink_adjacent_coordinates(spec, p, batch, 1e-5);
  EXPECT_TRUE(skip[0]);
  EXPECT_TRUE(skip[2]);
  EXPECT_FALSE(skip[1]);
  EXPECT_FALSE(skip[3]);
  for (std::size_t k = 4; k < skip.size(); ++k) EXPECT_FALSE(skip[k]);
  const auto lr = ModelSpec::logistic_regression(1, 2);
  const auto none = kink_adjacent_coordinates(lr, ParamVector(4), batch, 1e-5);
  EXPECT_EQ(std::count(none.begin(), none.end(), true), 0);
}

TEST(MaxRelativeError, FloorAndSkip) {
  const ParamVector a{1.0, 0.0, 5.0}, b{1.1, 1e-7, 0.0};
  EXPECT_NEAR(max_relative_error(a, b, {false, false, true}), 0.1 / 1.1, 1e-15);
  // |1e-7 - 0| / max(1e-7, 0, 1e-5) = 0.01
  EXPECT_NEAR(max_relative_error(ParamVector{0.0}, ParamVector{1e-7}), 0.01, 1e-12);
  EXPECT_THROW(max_relative_error(a, ParamVector(2)), Error);
}

TEST(Accuracy, AllCorrectAndAllWrong) {
  const auto spec = ModelSpec::logistic_regression(1, 2);
  // logit_0 = x, logit_1 = -x
  const ParamVector p{1.0, -1.0, 0.0, 0.0};
  Batch right{1, {1.0, 2.0, -1.0}, {0, 0, 1}, {0, 1, 2}};
  Batch wrong{1, {1.0, 2.0, -1.0}, {1, 1, 0}, {0, 1, 2}};
  EXPECT_EQ(accuracy(spec, p, right), 1.0);
  EXPECT_EQ(accuracy(spec, p, wrong), 0.0);
  const std::vector<Batch> both{right, wrong};
  EXPECT_EQ(accuracy(spec, p, both), 0.5);
}

TEST(Accuracy, TiesGoToLowestIndex) {
  const auto spec = ModelSpec::logistic_regression(2, 3);
  const std::vector<double> x{0.5, -0.5};
  EXPECT_EQ(predict(spec, ParamVector(9), x), 0u);
}

TEST(Accuracy, RandomLabelsNearChance) {
  RngStream s(10, 0);
  const std::size_t c = 4, n = 20000;
  const auto spec = ModelSpec::logistic_regression(3, c);
  auto p = init_params(spec, s);
  const auto batch = random_batch(s, 3, c, n);
  const double acc = accuracy(spec, p, batch);
  const double q = 1.0 / c;
  EXPECT_NEAR(acc, q, 3.0 * std::sqrt(q * (1 - q) / n));
}

TEST(Accuracy, EmptySetRejected) {
  const auto spec = ModelSpec::logistic_regression(2, 2);
  EXPECT_THROW(accuracy(spec, ParamVector(6), Batch{2, {}, {}, {}}), Error);
  EXPECT_THROW(accuracy(spec, ParamVector(6), std::span<const Batch>{}), Error);
}
