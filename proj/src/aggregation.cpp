#include "hsgd/aggregation.hpp"

namespace hsgd {

std::vector<double> aggregation_weights(AggregationRule rule, std::span<const std::size_t> taus) {
  require(!taus.empty(), ErrorCode::kEmptyInput, "aggregation: no workers");
  for (auto t : taus) require(t >= 1, ErrorCode::kInvalidArgument, "aggregation: tau must be >= 1");
  const std::size_t p = taus.size();
  std::vector<double> w(p);
  switch (rule) {
    case AggregationRule::kBalanced:
      for (auto& x : w) x = 1.0 / static_cast<double>(p);
      break;
    case AggregationRule::kTauWeighted: {
      double total = 0.0;
      for (auto t : taus) total += static_cast<double>(t);
      for (std::size_t i = 0; i < p; ++i) w[i] = static_cast<double>(taus[i]) / total;
      break;
    }
    case AggregationRule::kFedNova: {
      double total = 0.0;
      for (auto t : taus) total += 1.0 / static_cast<double>(t);
      for (std::size_t i = 0; i < p; ++i) w[i] = (1.0 / static_cast<double>(taus[i])) / total;
      break;
    }
  }
  return w;
}

ParamVector aggregate(AggregationRule rule, std::span<const ParamVector> models,
                      std::span<const std::size_t> taus, const ParamVector* round_start) {
  require(!models.empty(), ErrorCode::kEmptyInput, "aggregate: no models");
  require(models.size() == taus.size(), ErrorCode::kLengthMismatch,
          "aggregate: models and taus differ in count");
  for (const auto& m : models) require_same_length(m, models.front(), "aggregate");
  const auto weights = aggregation_weights(rule, taus);
  if (rule != AggregationRule::kFedNova) return weighted_sum(models, weights);

  require(round_start != nullptr, ErrorCode::kInvalidArgument,
          "aggregate: fednova needs the round-start model");
  require_same_length(*round_start, models.front(), "aggregate");
  ParamVector out = *round_start;
  for (std::size_t i = 0; i < models.size(); ++i) {
    for (std::size_t k = 0; k < out.size(); ++k) {
      out[k] += weights[i] * (models[i][k] - (*round_start)[k]);
    }
  }
  require_finite(out, "aggregate");
  return out;
}

}  // namespace hsgd
