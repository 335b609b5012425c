#include "datamarket/market.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "datamarket/errors.hpp"

namespace datamarket {

namespace {

std::string pair_label(const std::string& s, const std::string& b) { return "(" + s + "," + b + ")"; }

std::string number(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::map<std::string, std::size_t> index_by_id(const auto& items) {
  std::map<std::string, std::size_t> out;
  for (std::size_t i = 0; i < items.size(); ++i) out.emplace(items[i].id, i);
  return out;
}

std::vector<FeaturePoint> member_points(const MarketScenario& scenario,
                                        const std::vector<std::size_t>& members) {
  std::vector<FeaturePoint> points;
  points.reserve(members.size());
  for (std::size_t s : members) points.push_back(scenario.sources[s].feature);
  return points;
}

}  // namespace

void MarketScenario::canonicalize() {
  std::sort(sources.begin(), sources.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  std::sort(aggregators.begin(), aggregators.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  for (auto& s : sources) std::sort(s.sharing_set.begin(), s.sharing_set.end());
}

// ---------------------------------------------------------------- structure

MarketStructure::MarketStructure(const MarketScenario& scenario) {
  const auto agg_index = index_by_id(scenario.aggregators);
  sharing_.resize(scenario.sources.size());
  members_.resize(scenario.aggregators.size());
  for (std::size_t s = 0; s < scenario.sources.size(); ++s) {
    for (const auto& b_id : scenario.sources[s].sharing_set) {
      const auto it = agg_index.find(b_id);
      if (it == agg_index.end()) {
        throw ValidationError("source " + scenario.sources[s].id + " shares with unknown aggregator " + b_id);
      }
      sharing_[s].push_back(it->second);
    }
  }
  build();
}

MarketStructure::MarketStructure(std::size_t num_sources, std::size_t num_aggregators,
                                 std::vector<std::vector<std::size_t>> sharing)
    : sharing_(std::move(sharing)), members_(num_aggregators) {
  if (sharing_.size() != num_sources) throw ShapeError("sharing list size does not match source count");
  for (const auto& set : sharing_) {
    for (std::size_t b : set) {
      if (b >= num_aggregators) throw ShapeError("sharing set references aggregator out of range");
    }
  }
  build();
}

void MarketStructure::build() {
  const std::size_t ns = sharing_.size(), nb = members_.size();
  for (auto& set : sharing_) {
    std::sort(set.begin(), set.end());
    if (std::adjacent_find(set.begin(), set.end()) != set.end()) {
      throw ValidationError("sharing set lists an aggregator twice");
    }
  }
  for (auto& m : members_) m.clear();
  pairs_.clear();
  lookup_.assign(ns * nb, -1);
  for (std::size_t s = 0; s < ns; ++s) {
    for (std::size_t b : sharing_[s]) {
      lookup_[s * nb + b] = static_cast<std::ptrdiff_t>(pairs_.size());
      pairs_.push_back({s, b});
      members_[b].push_back(s);
    }
  }
}

std::optional<std::size_t> MarketStructure::pair_index(std::size_t source, std::size_t aggregator) const {
  if (source >= num_sources() || aggregator >= num_aggregators()) return std::nullopt;
  const auto v = lookup_[source * num_aggregators() + aggregator];
  if (v < 0) return std::nullopt;
  return static_cast<std::size_t>(v);
}

std::optional<std::size_t> MarketStructure::member_position(std::size_t aggregator, std::size_t source) const {
  const auto& m = members_.at(aggregator);
  const auto it = std::lower_bound(m.begin(), m.end(), source);
  if (it == m.end() || *it != source) return std::nullopt;
  return static_cast<std::size_t>(it - m.begin());
}

// ---------------------------------------------------------------- tables

PairTable::PairTable(const MarketStructure& structure, double fill)
    : structure_(structure), values_(structure.num_pairs(), fill) {}

std::optional<double> PairTable::find(std::size_t source, std::size_t aggregator) const {
  const auto idx = structure_.pair_index(source, aggregator);
  if (!idx) return std::nullopt;
  return values_[*idx];
}

double PairTable::at(std::size_t source, std::size_t aggregator) const {
  const auto idx = structure_.pair_index(source, aggregator);
  if (!idx) throw ShapeError("no sharing pair (" + std::to_string(source) + "," + std::to_string(aggregator) + ")");
  return values_[*idx];
}

double& PairTable::at(std::size_t source, std::size_t aggregator) {
  const auto idx = structure_.pair_index(source, aggregator);
  if (!idx) throw ShapeError("no sharing pair (" + std::to_string(source) + "," + std::to_string(aggregator) + ")");
  return values_[*idx];
}

XiTable::XiTable(const MarketStructure& structure) : structure_(structure) {
  blocks_.reserve(structure.num_aggregators());
  for (std::size_t b = 0; b < structure.num_aggregators(); ++b) {
    const auto n = static_cast<Eigen::Index>(structure.members(b).size());
    blocks_.push_back(Eigen::MatrixXd::Identity(n, n));
  }
}

std::optional<double> XiTable::find(std::size_t aggregator, std::size_t i, std::size_t l) const {
  if (aggregator >= blocks_.size()) return std::nullopt;
  const auto pi = structure_.member_position(aggregator, i);
  const auto pl = structure_.member_position(aggregator, l);
  if (!pi || !pl) return std::nullopt;
  return blocks_[aggregator](static_cast<Eigen::Index>(*pi), static_cast<Eigen::Index>(*pl));
}

double XiTable::at(std::size_t aggregator, std::size_t i, std::size_t l) const {
  const auto v = find(aggregator, i, l);
  if (!v) throw ShapeError("xi entry outside the aggregator's dataset");
  return *v;
}

double& XiTable::at(std::size_t aggregator, std::size_t i, std::size_t l) {
  const auto pi = structure_.member_position(aggregator, i);
  const auto pl = structure_.member_position(aggregator, l);
  if (!pi || !pl) throw ShapeError("xi entry outside the aggregator's dataset");
  return blocks_.at(aggregator)(static_cast<Eigen::Index>(*pi), static_cast<Eigen::Index>(*pl));
}

// ---------------------------------------------------------------- derivations

PairTable derive_beta(const MarketScenario& scenario) {
  const MarketStructure structure(scenario);
  PairTable beta(structure);
  for (std::size_t b = 0; b < structure.num_aggregators(); ++b) {
    const auto& members = structure.members(b);
    if (members.empty()) continue;
    const auto& agg = scenario.aggregators[b];
    if (scenario.mode == ParameterMode::direct) {
      const auto row = scenario.direct.beta.find(agg.id);
      for (std::size_t s : members) {
        const auto& sid = scenario.sources[s].id;
        if (row == scenario.direct.beta.end() || !row->second.contains(sid)) {
          throw ValidationError("direct beta missing for " + pair_label(sid, agg.id));
        }
        beta.at(s, b) = row->second.at(sid);
      }
      continue;
    }
    const auto points = member_points(scenario, members);
    const auto h = separability_coefficients(agg.estimator, points, agg.query_dist);
    for (std::size_t k = 0; k < members.size(); ++k) beta.at(members[k], b) = h[k];
  }
  return beta;
}

XiTable derive_xi(const MarketScenario& scenario) {
  const MarketStructure structure(scenario);
  XiTable xi(structure);
  for (std::size_t b = 0; b < structure.num_aggregators(); ++b) {
    const auto& members = structure.members(b);
    const auto& agg = scenario.aggregators[b];
    if (scenario.mode == ParameterMode::direct) {
      const auto block = scenario.direct.xi.find(agg.id);
      if (block == scenario.direct.xi.end()) continue;
      for (std::size_t i : members) {
        const auto row = block->second.find(scenario.sources[i].id);
        if (row == block->second.end()) continue;
        for (std::size_t l : members) {
          const auto cell = row->second.find(scenario.sources[l].id);
          if (cell == row->second.end()) continue;
          if (i == l && cell->second != 1.0) {
            throw ValidationError("diagonal xi must be 1 for aggregator " + agg.id);
          }
          xi.at(b, i, l) = cell->second;
        }
      }
      continue;
    }
    const auto points = member_points(scenario, members);
    for (std::size_t pi = 0; pi < members.size(); ++pi) {
      std::vector<FeaturePoint> rest;
      std::vector<std::size_t> rest_ids;
      for (std::size_t pl = 0; pl < members.size(); ++pl) {
        if (pl == pi) continue;
        rest.push_back(points[pl]);
        rest_ids.push_back(members[pl]);
      }
      std::vector<double> h;
      try {
        h = separability_coefficients(agg.estimator, rest, QueryDistribution::point_mass(points[pi]));
      } catch (const IllDefinedEstimatorError& e) {
        throw IllDefinedPaymentError("payment from " + agg.id + " to " + scenario.sources[members[pi]].id +
                                     " is ill-defined: " + e.what());
      }
      for (std::size_t k = 0; k < rest_ids.size(); ++k) xi.at(b, members[pi], rest_ids[k]) = h[k];
    }
  }
  return xi;
}

GammaTables derive_gamma(const MarketScenario& scenario, const PairTable& beta) {
  const MarketStructure& structure = beta.structure();
  GammaTables out{PairTable(structure), std::vector<double>(structure.num_sources(), 0.0)};
  for (const auto& [s, b] : structure.pairs()) {
    const auto& agg = scenario.aggregators[b];
    double value = beta.at(s, b);
    for (std::size_t j : structure.sharing(s)) {
      if (j == b) continue;
      const auto w = agg.competition_weights.find(scenario.aggregators[j].id);
      if (w != agg.competition_weights.end()) value -= w->second * beta.at(s, j);
    }
    value /= agg.payment_scale;
    out.gamma.at(s, b) = value;
    out.gamma_total[s] += value;
  }
  return out;
}

XiMatrix assemble_xi_matrix(const XiTable& xi) {
  const MarketStructure& structure = xi.structure();
  XiMatrix out;
  out.index = structure.pairs();
  const auto n = static_cast<Eigen::Index>(structure.num_pairs());
  out.matrix = Eigen::MatrixXd::Zero(n, n);
  // Row (s,b) holds the coefficient of a_l^j in b's interior best response:
  // xi^j_{l,s} for j != b in B_s and l != s in S_j with l also in S_b.
  for (std::size_t r = 0; r < structure.num_pairs(); ++r) {
    const auto [s, b] = structure.pairs()[r];
    for (std::size_t j : structure.sharing(s)) {
      if (j == b) continue;
      for (std::size_t l : structure.members(j)) {
        if (l == s || !structure.shares(l, b)) continue;
        const std::size_t c = *structure.pair_index(l, j);
        out.matrix(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = xi.at(j, l, s);
      }
    }
  }
  return out;
}

XiMatrix assemble_xi_matrix(const MarketScenario&, const XiTable& xi) { return assemble_xi_matrix(xi); }

DerivedParameters derive_parameters(const MarketScenario& scenario) {
  DerivedParameters p;
  for (const auto& s : scenario.sources) p.source_ids.push_back(s.id);
  for (const auto& b : scenario.aggregators) p.aggregator_ids.push_back(b.id);
  p.structure = MarketStructure(scenario);
  for (const auto& s : scenario.sources) {
    p.models.push_back(s.effort_model);
    p.bounds.push_back(incentive_bounds(s.effort_model));
  }
  p.mode = scenario.mode;
  p.beta = derive_beta(scenario);
  p.xi = derive_xi(scenario);
  auto gamma = derive_gamma(scenario, p.beta);
  p.gamma = std::move(gamma.gamma);
  p.gamma_total = std::move(gamma.gamma_total);
  p.xi_matrix = assemble_xi_matrix(p.xi);
  return p;
}

bool DerivedParameters::all_bounded() const {
  return std::all_of(models.begin(), models.end(), [](const auto& m) { return m.effort_set().is_bounded(); });
}

bool DerivedParameters::all_unbounded() const {
  return std::none_of(models.begin(), models.end(), [](const auto& m) { return m.effort_set().is_bounded(); });
}

std::size_t DerivedParameters::source_index(const std::string& id) const {
  const auto it = std::find(source_ids.begin(), source_ids.end(), id);
  if (it == source_ids.end()) throw ShapeError("unknown source id " + id);
  return static_cast<std::size_t>(it - source_ids.begin());
}

std::size_t DerivedParameters::aggregator_index(const std::string& id) const {
  const auto it = std::find(aggregator_ids.begin(), aggregator_ids.end(), id);
  if (it == aggregator_ids.end()) throw ShapeError("unknown aggregator id " + id);
  return static_cast<std::size_t>(it - aggregator_ids.begin());
}

// ---------------------------------------------------------------- validation

bool ValidationReport::has(const std::string& code) const {
  return std::any_of(violations.begin(), violations.end(), [&](const auto& v) { return v.code == code; });
}

ValidationReport validate_scenario(const MarketScenario& input) {
  ValidationReport report;
  auto add = [&](std::string code, std::string message) {
    report.violations.push_back({std::move(code), std::move(message)});
  };

  MarketScenario scenario = input;
  scenario.canonicalize();

  if (scenario.sources.empty()) add("empty_market", "scenario has no sources");
  if (scenario.aggregators.empty()) add("empty_market", "scenario has no aggregators");

  std::set<std::string> source_ids, agg_ids;
  for (const auto& s : scenario.sources) {
    if (!source_ids.insert(s.id).second) add("duplicate_id", "duplicate source id " + s.id);
  }
  for (const auto& b : scenario.aggregators) {
    if (!agg_ids.insert(b.id).second) add("duplicate_id", "duplicate aggregator id " + b.id);
  }

  bool structure_ok = report.ok();
  for (const auto& s : scenario.sources) {
    if (s.sharing_set.empty()) {
      add("empty_sharing_set", "source " + s.id + " shares with no aggregator");
      structure_ok = false;
    }
    std::set<std::string> seen;
    for (const auto& b : s.sharing_set) {
      if (!agg_ids.contains(b)) {
        add("unknown_aggregator", "source " + s.id + " shares with unknown aggregator " + b);
        structure_ok = false;
      }
      if (!seen.insert(b).second) {
        add("duplicate_sharing", "source " + s.id + " lists aggregator " + b + " twice");
        structure_ok = false;
      }
    }
  }

  for (const auto& b : scenario.aggregators) {
    for (const auto& [rival, zeta] : b.competition_weights) {
      if (rival == b.id) add("zeta_self", "aggregator " + b.id + " has a competition weight on itself");
      else if (!agg_ids.contains(rival)) add("zeta_unknown", "aggregator " + b.id + " weights unknown rival " + rival);
      if (!(zeta >= 0.0 && zeta <= 1.0)) {
        add("zeta_range", "competition weight of " + b.id + " on " + rival + " is outside [0,1]");
      }
    }
    if (!(b.payment_scale > 0.0) || !std::isfinite(b.payment_scale)) {
      add("payment_scale", "payment scale of " + b.id + " must be positive");
    } else if (b.payment_scale != 1.0) {
      report.notes.push_back("demands of aggregator " + b.id + " divided by payment scale " +
                             number(b.payment_scale) + " to normalize it to 1");
    }
  }

  std::size_t bounded = 0;
  for (const auto& s : scenario.sources) bounded += s.effort_model.effort_set().is_bounded() ? 1 : 0;
  if (bounded != 0 && bounded != scenario.sources.size()) add("mixed_effort_kinds", "mixed effort-set kinds");

  if (scenario.mode == ParameterMode::estimator_derived) {
    const std::size_t d = scenario.ground_truth.coefficients.size();
    for (const auto& s : scenario.sources) {
      if (s.feature.size() != d || d == 0) {
        add("dimension", "feature of source " + s.id + " does not match the ground-truth dimension");
        structure_ok = false;
      }
    }
    for (const auto& b : scenario.aggregators) {
      try {
        b.query_dist.validate();
      } catch (const DomainError& e) {
        add("query_distribution", "query distribution of " + b.id + ": " + e.what());
      }
      for (const auto& atom : b.query_dist.atoms) {
        if (atom.point.size() != d) {
          add("dimension", "query atom of " + b.id + " does not match the ground-truth dimension");
          structure_ok = false;
          break;
        }
      }
    }
  } else {
    for (const auto& [b, row] : scenario.direct.beta) {
      if (!agg_ids.contains(b)) add("direct_unknown_id", "direct beta references unknown aggregator " + b);
      for (const auto& [s, v] : row) {
        if (!source_ids.contains(s)) add("direct_unknown_id", "direct beta references unknown source " + s);
        if (!std::isfinite(v)) add("beta_nonfinite", "beta " + pair_label(s, b) + " is not finite");
      }
    }
    for (const auto& [b, block] : scenario.direct.xi) {
      if (!agg_ids.contains(b)) add("direct_unknown_id", "direct xi references unknown aggregator " + b);
      for (const auto& [i, row] : block) {
        for (const auto& [l, v] : row) {
          if (i == l && v != 1.0) add("xi_diagonal", "diagonal xi must be 1 (aggregator " + b + ", source " + i + ")");
          if (!(v >= 0.0) || !std::isfinite(v)) add("xi_negative", "xi of " + b + " at (" + i + "," + l + ") must be a finite nonnegative number");
        }
      }
    }
  }

  if (!structure_ok || report.has("xi_diagonal")) return report;

  DerivedParameters params;
  try {
    params = derive_parameters(scenario);
  } catch (const IllDefinedPaymentError& e) {
    add("ill_defined_payment", e.what());
    return report;
  } catch (const IllDefinedEstimatorError& e) {
    add("ill_defined_estimator", e.what());
    return report;
  } catch (const Error& e) {
    add("derivation", e.what());
    return report;
  }

  for (const auto& [s, b] : params.structure.pairs()) {
    if (!(params.gamma.at(s, b) > 0.0)) {
      add("nonpositive_demand", "nonpositive demand " + pair_label(params.source_ids[s], params.aggregator_ids[b]));
    }
  }
  for (std::size_t s = 0; s < params.source_ids.size(); ++s) {
    const double g = params.gamma_total[s];
    const auto& bnd = params.bounds[s];
    if (g < bnd.a_lower) {
      add("insufficient_demand", "total demand " + number(g) + " of " + params.source_ids[s] +
                                     " is below a_lower = " + number(bnd.a_lower));
    }
    if (bnd.is_bounded() && !(g < bnd.a_upper)) {
      add("demand_above_cap", "total demand " + number(g) + " of " + params.source_ids[s] +
                                  " is not below a_upper = " + number(bnd.a_upper));
    }
  }
  return report;
}

MarketScenario symmetric_direct_scenario(std::size_t num_sources, std::size_t num_aggregators,
                                         double beta, double xi_off, const EffortVarianceModel& model) {
  MarketScenario sc;
  sc.mode = ParameterMode::direct;
  std::vector<std::string> agg_ids;
  for (std::size_t b = 0; b < num_aggregators; ++b) agg_ids.push_back("b" + std::to_string(b + 1));
  for (std::size_t s = 0; s < num_sources; ++s) {
    sc.sources.push_back({"s" + std::to_string(s + 1), {}, model, agg_ids});
  }
  for (const auto& id : agg_ids) {
    AggregatorSpec agg;
    agg.id = id;
    sc.aggregators.push_back(agg);
    for (const auto& src : sc.sources) {
      sc.direct.beta[id][src.id] = beta;
      for (const auto& other : sc.sources) {
        sc.direct.xi[id][src.id][other.id] = src.id == other.id ? 1.0 : xi_off;
      }
    }
  }
  sc.canonicalize();
  return sc;
}

}  // namespace datamarket
