#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "hsgd/core_math.hpp"

namespace hsgd {

enum class AggregationRule {
  kBalanced,     // 1 / P
  kTauWeighted,  // tau_i / sum tau
  kFedNova,      // (1 / tau_i) / sum (1 / tau), applied to deltas from the round start
};

/// Aggregation weights for the given local update counts. Always on the
/// probability simplex.
std::vector<double> aggregation_weights(AggregationRule rule, std::span<const std::size_t> taus);

/// Combines the local models of one round.
///
/// kFedNova rescales deltas W_i - W_start by the inverse-tau weights and adds
/// them back to `round_start`, which is required for that rule and ignored by
/// the others. This is a simplified inverse-tau reading of FedNova, not the
/// full published normalization.
ParamVector aggregate(AggregationRule rule, std::span<const ParamVector> models,
                      std::span<const std::size_t> taus,
                      const ParamVector* round_start = nullptr);

}  // namespace hsgd
