#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hsgd/workers.hpp"

namespace hsgd {

/// Simulated costs. Worker classes come from WorkerSpec::iter_cost; the
/// model here supplies the per-class defaults and the flat aggregation cost.
struct CostModel {
  double fast_iter_cost = 0.1940;
  double slow_iter_cost = 6.5230;
  double agg_cost = 0.0;

  void validate() const;
  double iter_cost(WorkerClass c) const {
    return c == WorkerClass::kFast ? fast_iter_cost : slow_iter_cost;
  }
};

struct RoundTiming {
  std::vector<double> compute_time;
  std::vector<double> blocking_time;
  double round_wall = 0.0;
  std::size_t agg_count = 1;
};

/// compute_i = tau_i * iter_cost_i; the round ends when the slowest worker
/// finishes plus one aggregation; everyone else blocks for the difference.
RoundTiming round_timing(std::span<const WorkerSpec> workers, const CostModel& cost);

struct Timeline {
  double total_wall = 0.0;
  std::vector<double> total_compute;
  std::vector<double> total_blocking;
  std::size_t total_agg_count = 0;
};

Timeline run_timeline(std::size_t rounds, std::span<const WorkerSpec> workers,
                      const CostModel& cost);

/// Simulated clock advanced once per aggregation round.
class SimClock {
 public:
  explicit SimClock(CostModel cost) : cost_(cost) { cost_.validate(); }

  const RoundTiming& advance(std::span<const WorkerSpec> workers);

  double wall() const { return wall_; }
  double blocking_total() const { return blocking_; }
  std::size_t agg_count() const { return agg_count_; }
  const RoundTiming& last() const { return last_; }

 private:
  CostModel cost_;
  RoundTiming last_;
  double wall_ = 0.0;
  double blocking_ = 0.0;
  std::size_t agg_count_ = 0;
};

}  // namespace hsgd
