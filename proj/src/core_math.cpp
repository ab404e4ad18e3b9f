#include "hsgd/core_math.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>
#include <unordered_map>

namespace hsgd {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kLengthMismatch: return "length_mismatch";
    case ErrorCode::kNonFinite: return "non_finite";
    case ErrorCode::kInvalidLambda: return "invalid_lambda";
    case ErrorCode::kInvalidConfig: return "invalid_config";
    case ErrorCode::kParseError: return "parse_error";
    case ErrorCode::kIoError: return "io_error";
    case ErrorCode::kEmptyInput: return "empty_input";
  }
  return "unknown";
}

ParamVector::ParamVector(std::vector<double> values) : values_(std::move(values)) {
  require_finite(*this, "ParamVector");
}

ParamVector::ParamVector(std::initializer_list<double> values) : values_(values) {
  require_finite(*this, "ParamVector");
}

bool ParamVector::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

double ParamVector::norm() const {
  double sum = 0.0;
  for (double v : values_) sum += v * v;
  return std::sqrt(sum);
}

void require_finite(const ParamVector& v, const char* what) {
  require(v.all_finite(), ErrorCode::kNonFinite, std::string(what) + ": non-finite entry");
}

void require_same_length(const ParamVector& a, const ParamVector& b, const char* what) {
  require(a.size() == b.size(), ErrorCode::kLengthMismatch,
          std::string(what) + ": length " + std::to_string(a.size()) + " vs " +
              std::to_string(b.size()));
}

// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
  return mix64(a ^ (mix64(b + 0x9e3779b97f4a7c15ULL) + 0x632be59bd9b4e019ULL + (a << 6) + (a >> 2)));
}

namespace {
constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id), key_(hash_combine(mix64(seed), stream_id)) {}

std::uint64_t RngStream::next_u64() {
  ++counter_;
  return mix64(key_ + counter_ * kGamma);
}

__extension__ typedef unsigned __int128 u128;

std::uint64_t RngStream::uniform_below(std::uint64_t bound) {
  require(bound > 0, ErrorCode::kInvalidArgument, "uniform_below: bound must be positive");
  // Lemire's multiply-shift with rejection; unbiased.
  u128 m = static_cast<u128>(next_u64()) * bound;
  auto low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      m = static_cast<u128>(next_u64()) * bound;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

double RngStream::uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

double RngStream::normal() {
  // Box-Muller; u1 in (0, 1] avoids log(0).
  const double u1 = 1.0 - uniform01();
  const double u2 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

RngStream RngStream::derive(std::uint64_t tag) const {
  return RngStream(seed_, hash_combine(stream_id_, tag));
}

ParamVector axpy(double a, const ParamVector& x, const ParamVector& y) {
  require(std::isfinite(a), ErrorCode::kNonFinite, "axpy: non-finite scale");
  require_same_length(x, y, "axpy");
  ParamVector out(y.size());
  for (std::size_t k = 0; k < y.size(); ++k) out[k] = a * x[k] + y[k];
  require_finite(out, "axpy");
  return out;
}

ParamVector weighted_sum(std::span<const ParamVector> models, std::span<const double> weights) {
  require(!models.empty(), ErrorCode::kEmptyInput, "weighted_sum: no models");
  require(models.size() == weights.size(), ErrorCode::kLengthMismatch,
          "weighted_sum: weights/models count differ");
  double total = 0.0;
  for (double w : weights) {
    require(std::isfinite(w) && w >= 0.0, ErrorCode::kInvalidArgument,
            "weighted_sum: weights must be finite and nonnegative");
    total += w;
  }
  require(std::abs(total - 1.0) <= kWeightSumTolerance, ErrorCode::kInvalidArgument,
          "weighted_sum: weights sum to " + std::to_string(total));
  ParamVector out(models.front().size());
  for (std::size_t i = 0; i < models.size(); ++i) {
    require_same_length(models[i], out, "weighted_sum");
    const double w = weights[i];
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += w * models[i][k];
  }
  require_finite(out, "weighted_sum");
  return out;
}

double cross_entropy_loss(std::span<const double> logits, std::size_t label) {
  require(label < logits.size(), ErrorCode::kInvalidArgument,
          "cross_entropy_loss: label out of range");
  const double top = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - top);
  const double loss = std::log(sum) - (logits[label] - top);
  require(std::isfinite(loss), ErrorCode::kNonFinite, "cross_entropy_loss: non-finite");
  // log(sum) >= 0 always; the subtraction may round to a tiny negative.
  return std::max(loss, 0.0);
}

double cross_entropy_loss(const ParamVector& logits, std::size_t label) {
  return cross_entropy_loss(logits.values(), label);
}

void rng_shuffle(RngStream& stream, std::span<std::size_t> items) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(stream.uniform_below(i));
    std::swap(items[i - 1], items[j]);
  }
}

std::vector<std::size_t> rng_choose_without_replacement(RngStream& stream, std::size_t n,
                                                        std::size_t k) {
  require(k <= n, ErrorCode::kInvalidArgument,
          "choose_without_replacement: k=" + std::to_string(k) + " > n=" + std::to_string(n));
  std::vector<std::size_t> out;
  out.reserve(k);
  // Partial forward Fisher-Yates. The sparse variant tracks only displaced
  // slots and yields exactly the same draws as the dense one.
  if (k * 4 >= n) {
    std::vector<std::size_t> slots(n);
    std::iota(slots.begin(), slots.end(), std::size_t{0});
    for (std::size_t i = 0; i < k; ++i) {
      const auto j = i + static_cast<std::size_t>(stream.uniform_below(n - i));
      std::swap(slots[i], slots[j]);
      out.push_back(slots[i]);
    }
    return out;
  }
  std::unordered_map<std::size_t, std::size_t> displaced;
  auto slot = [&](std::size_t i) {
    auto it = displaced.find(i);
    return it == displaced.end() ? i : it->second;
  };
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::size_t>(stream.uniform_below(n - i));
    const std::size_t vi = slot(i);
    const std::size_t vj = slot(j);
    displaced[j] = vi;
    displaced[i] = vj;
    out.push_back(vj);
  }
  return out;
}

}  // namespace hsgd
