#include "hsgd/workers.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "hsgd/data.hpp"

namespace hsgd {

void WorkerSpec::validate() const {
  require(tau >= 1, ErrorCode::kInvalidArgument, "worker: tau must be >= 1");
  require(std::isfinite(iter_cost) && iter_cost > 0.0, ErrorCode::kInvalidArgument,
          "worker: iter_cost must be > 0");
  require(batch_size >= 1, ErrorCode::kInvalidArgument, "worker: batch_size must be >= 1");
}

SystemProfile::SystemProfile(double alpha, std::size_t p_s, std::size_t p_f, double lambda,
                             std::size_t tau_f, SamplerMode mode)
    : alpha_(alpha),
      p_s_(p_s),
      p_f_(p_f),
      lambda_(lambda),
      tau_f_(tau_f),
      tau_s_(derive_tau_s(tau_f, alpha)),
      mode_(mode) {
  require(p_s_ >= 1, ErrorCode::kInvalidArgument, "profile: need at least one slow worker");
  require(mode_ == SamplerMode::kUniform || (std::isfinite(lambda_) && lambda_ >= 1.0),
          ErrorCode::kInvalidArgument, "profile: lambda must be >= 1");
  if (mode_ == SamplerMode::kUniform) lambda_ = 1.0;
}

std::size_t derive_tau_s(std::size_t tau_f, double alpha) {
  require(tau_f >= 1, ErrorCode::kInvalidArgument, "derive_tau_s: tau_f must be >= 1");
  require(std::isfinite(alpha) && alpha >= 1.0, ErrorCode::kInvalidArgument,
          "derive_tau_s: alpha must be >= 1");
  const double ratio = static_cast<double>(tau_f) / alpha;
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(ratio + 0.5)));
}

double measure_alpha(std::span<const double> iter_costs_fast,
                     std::span<const double> iter_costs_slow) {
  require(!iter_costs_fast.empty() && !iter_costs_slow.empty(), ErrorCode::kEmptyInput,
          "measure_alpha: need timings for both classes");
  auto mean = [](std::span<const double> xs) {
    double s = 0.0;
    for (double x : xs) {
      require(std::isfinite(x) && x > 0.0, ErrorCode::kInvalidArgument,
              "measure_alpha: timings must be positive");
      s += x;
    }
    return s / static_cast<double>(xs.size());
  };
  return mean(iter_costs_slow) / mean(iter_costs_fast);
}

void LrSchedule::validate() const {
  require(std::isfinite(base_lr) && base_lr > 0.0, ErrorCode::kInvalidArgument,
          "lr schedule: base_lr must be > 0");
  if (kind == LrKind::kMultistep) {
    require(std::isfinite(decay) && decay > 0.0, ErrorCode::kInvalidArgument,
            "lr schedule: decay must be > 0");
    require(std::adjacent_find(milestones.begin(), milestones.end(),
                               std::greater_equal<>()) == milestones.end(),
            ErrorCode::kInvalidArgument, "lr schedule: milestones must be strictly increasing");
  }
  if (kind == LrKind::kCosine) {
    require(total_rounds >= 1, ErrorCode::kInvalidArgument,
            "lr schedule: cosine needs total_rounds >= 1");
  }
}

double lr_at(const LrSchedule& schedule, std::size_t round) {
  schedule.validate();
  switch (schedule.kind) {
    case LrKind::kConstant:
      return schedule.base_lr;
    case LrKind::kMultistep: {
      const auto passed = std::count_if(schedule.milestones.begin(), schedule.milestones.end(),
                                        [&](std::size_t m) { return m <= round; });
      return schedule.base_lr * std::pow(schedule.decay, static_cast<double>(passed));
    }
    case LrKind::kCosine:
      require(round < schedule.total_rounds, ErrorCode::kInvalidArgument,
              "lr schedule: round " + std::to_string(round) + " beyond cosine horizon");
      return 0.5 * schedule.base_lr *
             (1.0 + std::cos(std::numbers::pi * static_cast<double>(round) /
                             static_cast<double>(schedule.total_rounds)));
  }
  return schedule.base_lr;
}

LocalTrainResult local_train(const ModelSpec& spec, const Dataset& data,
                             const ParamVector& start_params, std::span<const std::size_t> assigned,
                             std::size_t tau, double lr, std::size_t batch_size, RngStream& stream,
                             const LocalTrainOptions& options) {
  require(!assigned.empty(), ErrorCode::kEmptyInput, "local_train: empty assignment");
  require(tau >= 1, ErrorCode::kInvalidArgument, "local_train: tau must be >= 1");
  require(batch_size >= 1, ErrorCode::kInvalidArgument, "local_train: batch_size must be >= 1");
  require(std::isfinite(lr) && lr >= 0.0, ErrorCode::kInvalidArgument,
          "local_train: lr must be finite and >= 0");

  const std::size_t effective_batch = std::min(batch_size, assigned.size());
  std::vector<std::size_t> order(assigned.begin(), assigned.end());
  rng_shuffle(stream, order);
  std::size_t pos = 0;

  LocalTrainResult r;
  r.end_params = start_params;
  r.loss_records.reserve(tau * effective_batch);
  for (std::size_t step = 0; step < tau; ++step) {
    if (pos + effective_batch > order.size()) {
      rng_shuffle(stream, order);
      pos = 0;
    }
    const Batch batch = data.gather(std::span<const std::size_t>(order).subspan(pos, effective_batch));
    pos += effective_batch;

    LossAndGradient lg = loss_and_gradient(spec, r.end_params, batch);
    for (std::size_t j = 0; j < batch.size(); ++j) {
      r.loss_records.emplace_back(batch.sample_ids[j], lg.per_sample[j]);
    }
    if (options.weight_decay != 0.0) {
      lg.gradient = axpy(options.weight_decay, r.end_params, lg.gradient);
    }
    r.end_params = axpy(-lr, lg.gradient, r.end_params);
    ++r.steps;
  }
  return r;
}

}  // namespace hsgd
