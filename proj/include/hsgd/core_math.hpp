#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

#include "hsgd/error.hpp"

namespace hsgd {

/// Flat, fixed-length vector of model parameters or gradients.
///
/// The length never changes after construction. Every public operation that
/// produces a ParamVector rejects NaN/Inf entries with ErrorCode::kNonFinite.
class ParamVector {
 public:
  ParamVector() = default;
  explicit ParamVector(std::size_t length) : values_(length, 0.0) {}
  explicit ParamVector(std::vector<double> values);
  ParamVector(std::initializer_list<double> values);

  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double operator[](std::size_t k) const { return values_[k]; }
  double& operator[](std::size_t k) { return values_[k]; }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  const double* data() const { return values_.data(); }
  double* data() { return values_.data(); }

  bool all_finite() const;
  double norm() const;

  friend bool operator==(const ParamVector&, const ParamVector&) = default;

 private:
  std::vector<double> values_;
};

void require_finite(const ParamVector& v, const char* what);
void require_same_length(const ParamVector& a, const ParamVector& b, const char* what);

/// Deterministic random stream keyed by (seed, stream_id).
///
/// Counter-based: the n-th output depends only on the key and n, so per-worker
/// streams reproduce regardless of the order in which workers are scheduled.
/// All derived quantities (bounded integers, reals, normals) are computed here
/// rather than through <random> distributions, whose outputs differ between
/// standard library implementations.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  std::uint64_t next_u64();
  /// Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t uniform_below(std::uint64_t bound);
  /// Uniform real in [0, 1) with 53 random bits.
  double uniform01();
  double uniform(double lo, double hi);
  double normal();

  /// Child stream with the same seed and an id mixed from this id and `tag`.
  RngStream derive(std::uint64_t tag) const;

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t x);
std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b);

/// result[k] = a * x[k] + y[k]
ParamVector axpy(double a, const ParamVector& x, const ParamVector& y);

/// result[k] = sum_i weights[i] * models[i][k]. Weights must be nonnegative
/// and sum to 1 within 1e-12.
ParamVector weighted_sum(std::span<const ParamVector> models, std::span<const double> weights);

inline constexpr double kWeightSumTolerance = 1e-12;

/// -log softmax(logits)[label], computed with max subtraction.
double cross_entropy_loss(std::span<const double> logits, std::size_t label);
double cross_entropy_loss(const ParamVector& logits, std::size_t label);

/// In-place Fisher-Yates shuffle driven by `stream`.
void rng_shuffle(RngStream& stream, std::span<std::size_t> items);

/// k distinct indices from [0, n), in draw order. Every k-subset is equally
/// likely.
std::vector<std::size_t> rng_choose_without_replacement(RngStream& stream, std::size_t n,
                                                        std::size_t k);

}  // namespace hsgd
