#include "hsgd/simclock.hpp"

#include <algorithm>
#include <cmath>

namespace hsgd {

void CostModel::validate() const {
  auto ok = [](double x) { return std::isfinite(x) && x >= 0.0; };
  require(ok(fast_iter_cost) && ok(slow_iter_cost) && ok(agg_cost), ErrorCode::kInvalidArgument,
          "cost model: costs must be finite and >= 0");
  require(fast_iter_cost > 0.0, ErrorCode::kInvalidArgument,
          "cost model: iteration costs must be > 0");
  require(slow_iter_cost >= fast_iter_cost, ErrorCode::kInvalidArgument,
          "cost model: slow iteration cost must be >= fast iteration cost");
}

RoundTiming round_timing(std::span<const WorkerSpec> workers, const CostModel& cost) {
  require(!workers.empty(), ErrorCode::kEmptyInput, "round_timing: no workers");
  cost.validate();
  RoundTiming t;
  t.compute_time.reserve(workers.size());
  double slowest = 0.0;
  for (const auto& w : workers) {
    w.validate();
    const double c = static_cast<double>(w.tau) * w.iter_cost;
    t.compute_time.push_back(c);
    slowest = std::max(slowest, c);
  }
  t.round_wall = slowest + cost.agg_cost;
  t.blocking_time.reserve(workers.size());
  for (double c : t.compute_time) t.blocking_time.push_back(slowest - c);
  return t;
}

Timeline run_timeline(std::size_t rounds, std::span<const WorkerSpec> workers,
                      const CostModel& cost) {
  require(rounds >= 1, ErrorCode::kInvalidArgument, "run_timeline: rounds must be >= 1");
  const RoundTiming one = round_timing(workers, cost);
  Timeline tl;
  tl.total_compute.assign(workers.size(), 0.0);
  tl.total_blocking.assign(workers.size(), 0.0);
  for (std::size_t r = 0; r < rounds; ++r) {
    tl.total_wall += one.round_wall;
    for (std::size_t i = 0; i < workers.size(); ++i) {
      tl.total_compute[i] += one.compute_time[i];
      tl.total_blocking[i] += one.blocking_time[i];
    }
    tl.total_agg_count += one.agg_count;
  }
  return tl;
}

const RoundTiming& SimClock::advance(std::span<const WorkerSpec> workers) {
  last_ = round_timing(workers, cost_);
  wall_ += last_.round_wall;
  for (double b : last_.blocking_time) blocking_ += b;
  agg_count_ += last_.agg_count;
  return last_;
}

}  // namespace hsgd
