#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "datamarket/market.hpp"

namespace datamarket {

struct GeneratorSpec {
  std::size_t num_sources = 3;
  std::size_t num_aggregators = 2;
  std::size_t dimension = 1;
  /// "exponential" or "inverse_power".
  std::string family = "exponential";
  bool bounded = false;
  /// Upper end of the uniform draw for off-diagonal xi; direct mode only.
  double coupling_scale = 0.3;
  /// Probability that a source shares with a given aggregator.
  double sharing_density = 1.0;
  ParameterMode mode = ParameterMode::estimator_derived;
  /// Also retry until rho(Xi) < 1, so the unbounded game has an equilibrium.
  bool require_existence = false;
  std::size_t max_attempts = 200;
};

struct GeneratedScenario {
  MarketScenario scenario;
  std::size_t attempts = 0;
};

/// Random scenario that passes validate_scenario. Attempt t draws from
/// Rng(derive_subseed(seed, t)); the first valid draw is returned. Effort
/// parameters are set so that a_lower_s is a random fraction of the total
/// demand of s (and, when bounded, the demand lies strictly below a_upper_s).
GeneratedScenario generate_scenario(const GeneratorSpec& spec, std::uint64_t seed);

}  // namespace datamarket
