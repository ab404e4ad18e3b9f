#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "hsgd/core_math.hpp"

namespace hsgd {

enum class ModelKind { kLogisticRegression, kMlp2 };

/// Shape of a small classifier.
///
/// Parameter layout is flat and row-major:
///   logistic_regression: W[C x D], b[C]
///   mlp2:                W1[H x D], b1[H], W2[C x H], b2[C]   (ReLU hidden layer)
struct ModelSpec {
  ModelKind kind = ModelKind::kLogisticRegression;
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  std::size_t num_classes = 0;

  static ModelSpec logistic_regression(std::size_t input_dim, std::size_t num_classes);
  static ModelSpec mlp2(std::size_t input_dim, std::size_t hidden_dim, std::size_t num_classes);

  void validate() const;
  std::size_t param_count() const;
};

/// Row-major features plus labels and the global dataset ids of each row.
struct Batch {
  std::size_t input_dim = 0;
  std::vector<double> features;
  std::vector<std::uint32_t> labels;
  std::vector<std::size_t> sample_ids;

  std::size_t size() const { return labels.size(); }
  std::span<const double> row(std::size_t j) const {
    return std::span<const double>(features).subspan(j * input_dim, input_dim);
  }
  void validate() const;
};

struct LossResult {
  double mean_loss = 0.0;
  std::vector<double> per_sample;
};

struct LossAndGradient {
  double mean_loss = 0.0;
  std::vector<double> per_sample;
  ParamVector gradient;
};

ParamVector init_params(const ModelSpec& spec, RngStream& stream);

/// Logits for one input row.
std::vector<double> logits(const ModelSpec& spec, const ParamVector& params,
                           std::span<const double> x);

LossResult forward_loss(const ModelSpec& spec, const ParamVector& params, const Batch& batch);

/// Gradient of the mean cross-entropy over the batch.
ParamVector backward(const ModelSpec& spec, const ParamVector& params, const Batch& batch);

/// One pass producing both per-sample losses and the gradient of their mean.
LossAndGradient loss_and_gradient(const ModelSpec& spec, const ParamVector& params,
                                  const Batch& batch);

/// Central differences of the mean loss, one coordinate at a time.
ParamVector finite_diff_grad(const ModelSpec& spec, const ParamVector& params, const Batch& batch,
                             double h);

/// Central differences of an arbitrary scalar function.
ParamVector finite_diff_grad(const std::function<double(const ParamVector&)>& f,
                             const ParamVector& params, double h);

/// Coordinates whose +-h perturbation moves some hidden pre-activation across
/// (or to within `margin` of) the ReLU kink. Always empty for logistic
/// regression.
std::vector<bool> kink_adjacent_coordinates(const ModelSpec& spec, const ParamVector& params,
                                            const Batch& batch, double h, double margin = 1e-7);

/// max_k |a_k - b_k| / max(|a_k|, |b_k|, floor) over coordinates not masked
/// out by `skip`.
double max_relative_error(const ParamVector& a, const ParamVector& b,
                          const std::vector<bool>& skip = {}, double floor = 1e-5);

/// Index of the largest logit, ties to the lowest index.
std::size_t predict(const ModelSpec& spec, const ParamVector& params, std::span<const double> x);

double accuracy(const ModelSpec& spec, const ParamVector& params, std::span<const Batch> batches);
double accuracy(const ModelSpec& spec, const ParamVector& params, const Batch& batch);

struct GradCheckReport {
  std::size_t instances = 0;
  double max_relative_error = 0.0;
  std::size_t coordinates_checked = 0;
  std::size_t coordinates_skipped = 0;  // kink-adjacent
};

/// Backward vs central differences on randomly drawn (model, params, batch)
/// instances of both kinds.
GradCheckReport gradient_check(std::size_t instances, std::uint64_t seed, double h = 1e-5);

}  // namespace hsgd
