#include "datamarket/simulation.hpp"

#include <cmath>
#include <sstream>

#include "datamarket/errors.hpp"
#include "datamarket/io.hpp"
#include "datamarket/rng.hpp"

namespace datamarket {

namespace {

std::vector<FeaturePoint> points_of(const MarketScenario& sc, const std::vector<std::size_t>& members) {
  std::vector<FeaturePoint> out;
  for (std::size_t s : members) out.push_back(sc.sources[s].feature);
  return out;
}

}  // namespace

MarketSimulator::MarketSimulator(const MarketScenario& scenario, const DerivedParameters& params,
                                 const EquilibriumResult& result)
    : scenario_(scenario), params_(params) {
  if (scenario.mode != ParameterMode::estimator_derived) {
    throw ValidationError("simulation needs an estimator-derived scenario");
  }
  if (!result.point) throw ValidationError("simulation needs a solved equilibrium");
  a_ = result.point->a;
  c_ = result.point->canonical_c;
  const auto& efforts = result.point->efforts;
  for (std::size_t s = 0; s < scenario.sources.size(); ++s) {
    stddev_.push_back(scenario.sources[s].effort_model.sigma(efforts.at(s)));
    truth_.push_back(scenario.ground_truth(scenario.sources[s].feature));
  }
  const auto& st = params.structure;
  loo_.resize(st.num_aggregators());
  for (std::size_t b = 0; b < st.num_aggregators(); ++b) {
    const auto pts = points_of(scenario, st.members(b));
    full_.emplace_back(pts);
    for (std::size_t k = 0; k < pts.size(); ++k) {
      std::vector<FeaturePoint> rest;
      for (std::size_t l = 0; l < pts.size(); ++l) {
        if (l != k) rest.push_back(pts[l]);
      }
      try {
        loo_[b].emplace_back(rest);
      } catch (const IllDefinedEstimatorError& e) {
        throw IllDefinedPaymentError("payment from " + params.aggregator_ids[b] + " to " +
                                     params.source_ids[st.members(b)[k]] + " is ill-defined: " + e.what());
      }
    }
  }
}

MarketRound MarketSimulator::round(std::uint64_t round_seed) const {
  const auto& st = params_.structure;
  MarketRound r;
  r.seed = round_seed;
  Rng rng(round_seed);
  r.responses.resize(truth_.size());
  for (std::size_t s = 0; s < truth_.size(); ++s) r.responses[s] = truth_[s] + stddev_[s] * rng.normal();
  r.loo_predictions = PairTable(st);
  r.payments = PairTable(st);
  r.estimates.resize(st.num_aggregators());
  r.estimation_errors.assign(st.num_aggregators(), 0.0);
  for (std::size_t b = 0; b < st.num_aggregators(); ++b) {
    const auto& members = st.members(b);
    std::vector<double> y;
    for (std::size_t s : members) y.push_back(r.responses[s]);
    for (std::size_t k = 0; k < members.size(); ++k) {
      std::vector<double> rest;
      for (std::size_t l = 0; l < members.size(); ++l) {
        if (l != k) rest.push_back(y[l]);
      }
      const std::size_t s = members[k];
      const double pred = loo_[b][k].predict(rest, scenario_.sources[s].feature);
      const double dev = r.responses[s] - pred;
      r.loo_predictions.at(s, b) = pred;
      r.payments.at(s, b) = c_.at(s, b) - a_.at(s, b) * dev * dev;
    }
    const Eigen::VectorXd theta = full_[b].fit(y);
    for (const auto& atom : scenario_.aggregators[b].query_dist.atoms) {
      double est = theta(theta.size() - 1);
      for (std::size_t i = 0; i < atom.point.size(); ++i) est += theta(static_cast<Eigen::Index>(i)) * atom.point[i];
      r.estimates[b].push_back(est);
      const double err = est - scenario_.ground_truth(atom.point);
      r.estimation_errors[b] += atom.probability * err * err;
    }
  }
  r.losses.assign(st.num_aggregators(), 0.0);
  for (std::size_t b = 0; b < st.num_aggregators(); ++b) {
    const auto& agg = scenario_.aggregators[b];
    double loss = r.estimation_errors[b];
    for (std::size_t j = 0; j < st.num_aggregators(); ++j) {
      const auto w = agg.competition_weights.find(params_.aggregator_ids[j]);
      if (j != b && w != agg.competition_weights.end()) loss -= w->second * r.estimation_errors[j];
    }
    double paid = 0.0;
    for (std::size_t s : st.members(b)) paid += r.payments.at(s, b);
    r.losses[b] = loss + agg.payment_scale * paid;
  }
  return r;
}

std::vector<MarketRound> MarketSimulator::run(std::size_t rounds, std::uint64_t seed) const {
  std::vector<MarketRound> out;
  out.reserve(rounds);
  for (std::size_t k = 0; k < rounds; ++k) out.push_back(round(derive_subseed(seed, k)));
  return out;
}

MarketRound simulate_round(const MarketScenario& scenario, const DerivedParameters& params,
                           const EquilibriumResult& result, std::uint64_t seed) {
  return MarketSimulator(scenario, params, result).round(seed);
}

PaymentSummary summarize_payments(const std::vector<MarketRound>& rounds, const DerivedParameters& params,
                                  const EquilibriumResult& result) {
  if (!result.point) throw ValidationError("summary needs a solved equilibrium");
  const auto& st = params.structure;
  const std::size_t n = st.num_sources();
  PaymentSummary out;
  out.mean_total_payment.assign(n, 0.0);
  out.standard_error.assign(n, 0.0);
  out.expected = result.point->efforts;
  std::vector<double> m2(n, 0.0);
  std::size_t count = 0;
  for (const auto& r : rounds) {
    ++count;
    for (std::size_t s = 0; s < n; ++s) {
      double total = 0.0;
      for (std::size_t b : st.sharing(s)) total += r.payments.at(s, b);
      const double delta = total - out.mean_total_payment[s];
      out.mean_total_payment[s] += delta / static_cast<double>(count);
      m2[s] += delta * (total - out.mean_total_payment[s]);
    }
  }
  if (count > 1) {
    for (std::size_t s = 0; s < n; ++s) {
      out.standard_error[s] = std::sqrt(m2[s] / static_cast<double>(count - 1) / static_cast<double>(count));
    }
  }
  return out;
}

std::string rounds_csv(const std::vector<MarketRound>& rounds, const DerivedParameters& params) {
  std::ostringstream os;
  os << "# schema: market_rounds/1\n";
  os << "round,seed,source,aggregator,response,loo_prediction,payment\n";
  for (std::size_t k = 0; k < rounds.size(); ++k) {
    const auto& r = rounds[k];
    for (const auto& [s, b] : params.structure.pairs()) {
      os << k << ',' << r.seed << ',' << params.source_ids[s] << ',' << params.aggregator_ids[b] << ','
         << format_double(r.responses[s]) << ',' << format_double(r.loo_predictions.at(s, b)) << ','
         << format_double(r.payments.at(s, b)) << '\n';
    }
  }
  return os.str();
}

}  // namespace datamarket
