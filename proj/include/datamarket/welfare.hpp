#pragma once

#include <vector>

#include "datamarket/equilibrium.hpp"
#include "datamarket/market.hpp"

namespace datamarket {

struct WelfareReport {
  std::vector<double> equilibrium_efforts;
  std::vector<double> optimal_efforts;
  double cost_at_equilibrium = 0.0;
  double cost_at_optimum = 0.0;
  double poa = 1.0;
  bool efficient_possible = false;
  /// Largest xi^b_{i,l} with i != l over all aggregators.
  double offdiagonal_xi_max = 0.0;
  /// Largest entry of Xi, i.e. the off-diagonal xi that actually couples the game.
  double coupling_max = 0.0;
};

/// Threshold below which an estimator-derived coupling counts as zero.
inline constexpr double kEstimatorCouplingZero = 1e-14;

/// L(e) = sum_s gamma_total_s sigma_s^2(e_s) + sum_s e_s.
double social_cost(const std::vector<double>& efforts, const DerivedParameters& params);

/// Minimizer of social_cost: mu_s(gamma_total_s), with the demand capped at
/// a_upper for bounded sources.
std::vector<double> optimal_efforts(const DerivedParameters& params);

/// True when no off-diagonal xi enters any aggregator's best response, i.e.
/// Xi has no nonzero entry. Exact zero test for direct parameters, 1e-14 for
/// estimator-derived ones.
bool efficiency_predicate(const DerivedParameters& params);

double offdiagonal_xi_max(const DerivedParameters& params);

WelfareReport price_of_anarchy(const EquilibriumResult& result, const DerivedParameters& params);

}  // namespace datamarket
