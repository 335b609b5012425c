#include "datamarket/generator.hpp"

#include <cmath>

#include "datamarket/equilibrium.hpp"
#include "datamarket/errors.hpp"
#include "datamarket/rng.hpp"

namespace datamarket {

namespace {

std::string make_id(char prefix, std::size_t index, std::size_t count) {
  std::string digits = std::to_string(index + 1);
  const std::size_t width = std::to_string(count).size();
  if (digits.size() < width) digits.insert(0, width - digits.size(), '0');
  return prefix + digits;
}

FeaturePoint random_point(Rng& rng, std::size_t d) {
  FeaturePoint p(d);
  for (auto& v : p) v = rng.uniform();
  return p;
}

EffortVarianceModel effort_model(const std::string& family, double sigma0, double a_lower, double a_upper, bool bounded) {
  // Both families have a_lower = 1 / (2 * rate * sigma0^2).
  const double rate = 1.0 / (2.0 * a_lower * sigma0 * sigma0);
  if (family == "exponential") {
    const EffortSet set = bounded ? EffortSet::bounded(std::log(a_upper / a_lower) / (2.0 * rate)) : EffortSet::unbounded();
    return EffortVarianceModel::exponential(sigma0, rate, set);
  }
  const EffortSet set =
      bounded ? EffortSet::bounded(std::pow(a_upper / a_lower, 1.0 / (2.0 * rate + 1.0)) - 1.0) : EffortSet::unbounded();
  return EffortVarianceModel::inverse_power(sigma0, rate, set);
}

std::optional<MarketScenario> attempt(const GeneratorSpec& spec, Rng& rng) {
  const std::size_t n = spec.num_sources, m = spec.num_aggregators, d = spec.dimension;
  const bool estimator = spec.mode == ParameterMode::estimator_derived;

  MarketScenario sc;
  sc.mode = spec.mode;
  std::vector<std::string> agg_ids;
  for (std::size_t b = 0; b < m; ++b) agg_ids.push_back(make_id('b', b, m));

  std::vector<std::size_t> members(m, 0);
  for (std::size_t s = 0; s < n; ++s) {
    DataSourceSpec src{make_id('s', s, n), {}, EffortVarianceModel::exponential(1.0, 1.0), {}};
    for (std::size_t b = 0; b < m; ++b) {
      if (spec.sharing_density >= 1.0 || rng.uniform() < spec.sharing_density) {
        src.sharing_set.push_back(agg_ids[b]);
        ++members[b];
      }
    }
    if (src.sharing_set.empty()) {
      const auto b = static_cast<std::size_t>(rng.uniform_int(0, m - 1));
      src.sharing_set.push_back(agg_ids[b]);
      ++members[b];
    }
    if (estimator) src.feature = random_point(rng, d);
    sc.sources.push_back(std::move(src));
  }

  for (std::size_t b = 0; b < m; ++b) {
    if (members[b] == 0 || (estimator && members[b] < d + 2)) return std::nullopt;
  }

  if (estimator) {
    sc.ground_truth.coefficients.resize(d);
    for (auto& c : sc.ground_truth.coefficients) c = rng.uniform(-1.0, 1.0);
    sc.ground_truth.intercept = rng.uniform(-1.0, 1.0);
  }
  for (std::size_t b = 0; b < m; ++b) {
    AggregatorSpec agg;
    agg.id = agg_ids[b];
    for (std::size_t j = 0; j < m; ++j) {
      if (j != b) agg.competition_weights[agg_ids[j]] = rng.uniform(0.0, 0.1);
    }
    if (estimator) {
      const std::size_t atoms = 1 + rng.uniform_int(0, 2);
      std::vector<double> w(atoms);
      double total = 0.0;
      for (auto& x : w) total += (x = rng.uniform(0.1, 1.0));
      double assigned = 0.0;
      for (std::size_t k = 0; k < atoms; ++k) {
        const double p = k + 1 == atoms ? 1.0 - assigned : w[k] / total;
        assigned += p;
        agg.query_dist.atoms.push_back({random_point(rng, d), p});
      }
    }
    sc.aggregators.push_back(std::move(agg));
  }
  sc.canonicalize();

  if (!estimator) {
    const MarketStructure st(sc);
    for (std::size_t b = 0; b < m; ++b) {
      const auto& id = sc.aggregators[b].id;
      for (std::size_t i : st.members(b)) {
        sc.direct.beta[id][sc.sources[i].id] = rng.uniform(0.5, 2.0);
        for (std::size_t l : st.members(b)) {
          sc.direct.xi[id][sc.sources[i].id][sc.sources[l].id] = i == l ? 1.0 : rng.uniform(0.0, spec.coupling_scale);
        }
      }
    }
  }

  DerivedParameters params;
  try {
    params = derive_parameters(sc);
  } catch (const IllDefinedEstimatorError&) {
    return std::nullopt;
  } catch (const IllDefinedPaymentError&) {
    return std::nullopt;
  }
  for (double g : params.gamma.values()) {
    if (!(g > 0.0)) return std::nullopt;
  }
  if (spec.require_existence && spectral_radius(params.xi_matrix.matrix) >= 1.0 - kRhoMargin) return std::nullopt;

  for (std::size_t s = 0; s < n; ++s) {
    const double demand = params.gamma_total[s];
    const double sigma0 = rng.uniform(0.5, 2.0);
    const double a_lower = rng.uniform(0.2, 0.9) * demand;
    const double a_upper = rng.uniform(1.2, 4.0) * demand;
    try {
      sc.sources[s].effort_model = effort_model(spec.family, sigma0, a_lower, a_upper, spec.bounded);
    } catch (const DomainError&) {
      return std::nullopt;
    }
  }
  if (!validate_scenario(sc).ok()) return std::nullopt;
  return sc;
}

}  // namespace

GeneratedScenario generate_scenario(const GeneratorSpec& spec, std::uint64_t seed) {
  if (spec.num_sources == 0 || spec.num_aggregators == 0) throw GenerationError("need at least one source and one aggregator", 0);
  if (spec.dimension == 0) throw GenerationError("feature dimension must be at least 1", 0);
  if (spec.family != "exponential" && spec.family != "inverse_power") {
    throw GenerationError("unknown variance family \"" + spec.family + "\"", 0);
  }
  if (!(spec.sharing_density > 0.0 && spec.sharing_density <= 1.0)) {
    throw GenerationError("sharing density must lie in (0, 1]", 0);
  }
  if (!(spec.coupling_scale >= 0.0) || !std::isfinite(spec.coupling_scale)) {
    throw GenerationError("coupling scale must be a finite nonnegative number", 0);
  }
  if (spec.mode == ParameterMode::estimator_derived && spec.num_sources < spec.dimension + 2) {
    throw GenerationError("estimator mode needs at least d + 2 sources so leave-one-out fits are well posed", 0);
  }
  for (std::size_t t = 0; t < spec.max_attempts; ++t) {
    Rng rng(derive_subseed(seed, t));
    if (auto sc = attempt(spec, rng)) return {std::move(*sc), t + 1};
  }
  throw GenerationError("no valid scenario within " + std::to_string(spec.max_attempts) + " attempts", spec.max_attempts);
}

}  // namespace datamarket
