#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "datamarket/equilibrium.hpp"
#include "datamarket/market.hpp"

namespace datamarket {

/// One realized market round at fixed contracts and efforts.
struct MarketRound {
  std::uint64_t seed = 0;
  /// y_s = f(x_s) + noise with variance sigma_s^2(e_s).
  std::vector<double> responses;
  /// Leave-one-out prediction of aggregator b at x_s.
  PairTable loo_predictions;
  /// c_s^b - a_s^b (y_s - loo prediction)^2.
  PairTable payments;
  /// Fitted value of each aggregator at each of its query atoms.
  std::vector<std::vector<double>> estimates;
  /// Query-weighted squared error of each aggregator's fit.
  std::vector<double> estimation_errors;
  /// Own error minus competition-weighted rival errors plus payment_scale * payments.
  std::vector<double> losses;
};

/// Simulates rounds at the contracts (a, c) and efforts stored in `result`.
/// Estimator-derived scenarios only. Round r uses Rng(derive_subseed(seed, r)).
class MarketSimulator {
 public:
  MarketSimulator(const MarketScenario& scenario, const DerivedParameters& params, const EquilibriumResult& result);

  MarketRound round(std::uint64_t round_seed) const;
  std::vector<MarketRound> run(std::size_t rounds, std::uint64_t seed) const;

 private:
  const MarketScenario& scenario_;
  const DerivedParameters& params_;
  PairTable a_, c_;
  std::vector<double> stddev_;
  std::vector<double> truth_;
  std::vector<OlsDesign> full_;                  // per aggregator
  std::vector<std::vector<OlsDesign>> loo_;      // per aggregator, per member position
};

MarketRound simulate_round(const MarketScenario& scenario, const DerivedParameters& params,
                           const EquilibriumResult& result, std::uint64_t seed);

struct PaymentSummary {
  std::vector<double> mean_total_payment;
  std::vector<double> standard_error;
  /// mu_s(a_total_s), the analytic expectation when c is on the polytope.
  std::vector<double> expected;
};

PaymentSummary summarize_payments(const std::vector<MarketRound>& rounds, const DerivedParameters& params,
                                  const EquilibriumResult& result);

/// CSV with a "# schema: market_rounds/1" line and one row per round and sharing pair:
/// round,seed,source,aggregator,response,loo_prediction,payment.
std::string rounds_csv(const std::vector<MarketRound>& rounds, const DerivedParameters& params);

}  // namespace datamarket
