#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "hsgd/core_math.hpp"
#include "hsgd/models.hpp"

namespace hsgd {

class Dataset;

enum class WorkerClass { kFast, kSlow };

struct WorkerSpec {
  std::size_t id = 0;
  WorkerClass worker_class = WorkerClass::kFast;
  std::size_t tau = 1;       // local updates per round
  double iter_cost = 1.0;    // simulated seconds per local update
  std::size_t batch_size = 1;

  void validate() const;
};

enum class SamplerMode { kSeparated, kUnified, kUniform };

/// Heterogeneity description: how many slow/fast workers, their speed ratio
/// alpha (slow iteration time / fast iteration time, folded so alpha >= 1),
/// the candidate-pool scale lambda and the fast local update count.
/// tau_s is always derived from tau_f and alpha.
class SystemProfile {
 public:
  SystemProfile(double alpha, std::size_t p_s, std::size_t p_f, double lambda, std::size_t tau_f,
                SamplerMode mode = SamplerMode::kSeparated);

  double alpha() const { return alpha_; }
  std::size_t p_s() const { return p_s_; }
  std::size_t p_f() const { return p_f_; }
  std::size_t workers() const { return p_s_ + p_f_; }
  double lambda() const { return lambda_; }
  std::size_t tau_f() const { return tau_f_; }
  std::size_t tau_s() const { return tau_s_; }
  SamplerMode sampler_mode() const { return mode_; }

 private:
  double alpha_;
  std::size_t p_s_;
  std::size_t p_f_;
  double lambda_;
  std::size_t tau_f_;
  std::size_t tau_s_;
  SamplerMode mode_;
};

enum class LrKind { kConstant, kMultistep, kCosine };

struct LrSchedule {
  LrKind kind = LrKind::kConstant;
  double base_lr = 0.1;
  std::vector<std::size_t> milestones;
  double decay = 0.1;
  std::size_t total_rounds = 0;  // cosine horizon

  void validate() const;
};

/// max(1, round(tau_f / alpha))
std::size_t derive_tau_s(std::size_t tau_f, double alpha);

/// mean(slow) / mean(fast)
double measure_alpha(std::span<const double> iter_costs_fast, std::span<const double> iter_costs_slow);

/// Learning rate for a communication round.
double lr_at(const LrSchedule& schedule, std::size_t round);

struct LocalTrainResult {
  ParamVector end_params;
  /// (sample id, per-sample loss) in processing order, newest occurrence last.
  std::vector<std::pair<std::size_t, double>> loss_records;
  std::size_t steps = 0;
};

struct LocalTrainOptions {
  double weight_decay = 0.0;
};

/// Runs exactly `tau` plain SGD steps starting from `start_params`.
///
/// Mini-batches are consecutive slices of a stream-shuffled permutation of
/// `assigned`; when fewer than a full batch remain the permutation is
/// reshuffled and traversal restarts. Batches hold min(batch_size,
/// |assigned|) distinct samples. Loss records are taken before each step.
LocalTrainResult local_train(const ModelSpec& spec, const Dataset& data,
                             const ParamVector& start_params, std::span<const std::size_t> assigned,
                             std::size_t tau, double lr, std::size_t batch_size, RngStream& stream,
                             const LocalTrainOptions& options = {});

}  // namespace hsgd
