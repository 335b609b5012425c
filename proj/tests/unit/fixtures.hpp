#pragma once

#include <string>
#include <vector>

#include "datamarket/market.hpp"

namespace fixtures {

using namespace datamarket;

// Estimator-mode scenario: one source per feature point, every source shares
// with every aggregator listed in `sharing[s]` (all aggregators when empty).
inline MarketScenario ols_scenario(const std::vector<FeaturePoint>& points, std::size_t num_aggregators,
                                   const std::vector<QueryDistribution>& queries,
                                   const EffortVarianceModel& model = EffortVarianceModel::exponential(1.0, 1.0),
                                   std::vector<std::vector<std::string>> sharing = {}) {
  MarketScenario sc;
  sc.mode = ParameterMode::estimator_derived;
  sc.ground_truth = {std::vector<double>(points.front().size(), 1.0), 0.0};
  std::vector<std::string> agg_ids;
  for (std::size_t b = 0; b < num_aggregators; ++b) agg_ids.push_back("b" + std::to_string(b + 1));
  for (std::size_t s = 0; s < points.size(); ++s) {
    sc.sources.push_back({"s" + std::to_string(s + 1), points[s], model,
                          sharing.empty() ? agg_ids : sharing[s]});
  }
  for (std::size_t b = 0; b < num_aggregators; ++b) {
    AggregatorSpec agg;
    agg.id = agg_ids[b];
    agg.query_dist = queries[b % queries.size()];
    sc.aggregators.push_back(agg);
  }
  sc.canonicalize();
  return sc;
}

inline std::vector<FeaturePoint> line_points(std::initializer_list<double> xs) {
  std::vector<FeaturePoint> out;
  for (double x : xs) out.push_back({x});
  return out;
}

// N=2, M=2 direct scenario with beta 1, off-diagonal xi 0.5, exponential(1, 0.5).
inline MarketScenario symmetric(double xi_off = 0.5, EffortSet set = EffortSet::unbounded()) {
  return symmetric_direct_scenario(2, 2, 1.0, xi_off, EffortVarianceModel::exponential(1.0, 0.5, set));
}

}  // namespace fixtures
