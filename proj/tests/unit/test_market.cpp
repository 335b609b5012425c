#include <doctest.h>

#include <cmath>

#include "datamarket/errors.hpp"
#include "datamarket/generator.hpp"
#include "fixtures.hpp"

using namespace datamarket;
using fixtures::line_points;

TEST_CASE("beta from the ols coefficients of each aggregator's dataset") {
  auto sc = fixtures::ols_scenario(line_points({0, 1}), 1, {QueryDistribution::point_mass({0})});
  const PairTable beta = derive_beta(sc);
  CHECK(beta.at(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(beta.at(1, 0)) < 1e-14);

  const auto pts = line_points({0, 1, 2});
  auto sc3 = fixtures::ols_scenario(pts, 1, {QueryDistribution::uniform(pts)});
  const PairTable b3 = derive_beta(sc3);
  std::vector<double> mean(3, 0.0);
  for (const auto& p : pts) {
    const auto h = ols_coefficients(pts, QueryDistribution::point_mass(p));
    for (std::size_t i = 0; i < 3; ++i) mean[i] += h[i] / 3.0;
  }
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(b3.at(i, 0) - mean[i]) < 1e-13);
}

TEST_CASE("sources outside an aggregator's dataset have no beta entry") {
  const auto pts = line_points({0, 1, 2, 3});
  auto sc = fixtures::ols_scenario(pts, 2, {QueryDistribution::point_mass({1})}, EffortVarianceModel::exponential(1, 1),
                                   {{"b1"}, {"b1"}, {"b1", "b2"}, {"b1", "b2"}});
  sc.sources[0].sharing_set = {"b1", "b2"};
  sc.canonicalize();
  const PairTable beta = derive_beta(sc);
  CHECK(beta.find(1, 1) == std::nullopt);
  CHECK(beta.find(0, 1).has_value());
}

TEST_CASE("xi leave-one-out example") {
  auto sc = fixtures::ols_scenario(line_points({0, 1, 2}), 1, {QueryDistribution::point_mass({1})});
  const XiTable xi = derive_xi(sc);
  CHECK(xi.at(0, 1, 0) == doctest::Approx(0.25).epsilon(1e-13));
  CHECK(xi.at(0, 1, 2) == doctest::Approx(0.25).epsilon(1e-13));
  for (std::size_t i = 0; i < 3; ++i) CHECK(xi.at(0, i, i) == 1.0);

  // Leave out (0): line through (1) and (2) evaluated at 0 has weights (2, -1).
  CHECK(xi.at(0, 0, 1) == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(xi.at(0, 0, 2) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("two sources make the payment ill-defined") {
  auto sc = fixtures::ols_scenario(line_points({0, 1}), 2, {QueryDistribution::point_mass({0})});
  try {
    derive_xi(sc);
    FAIL("expected IllDefinedPaymentError");
  } catch (const IllDefinedPaymentError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("b1") != std::string::npos);
    CHECK(msg.find("s1") != std::string::npos);
  }
  const auto report = validate_scenario(sc);
  CHECK(report.has("ill_defined_payment"));
}

TEST_CASE("gamma arithmetic") {
  auto sc = fixtures::symmetric();
  sc.direct.beta["b1"]["s1"] = 0.6;
  sc.direct.beta["b2"]["s1"] = 0.5;
  sc.aggregators[0].competition_weights["b2"] = 0.5;
  sc.aggregators[1].competition_weights["b1"] = 0.2;
  const auto g = derive_gamma(sc, derive_beta(sc));
  CHECK(g.gamma.at(0, 0) == doctest::Approx(0.35).epsilon(1e-15));
  CHECK(g.gamma.at(0, 1) == doctest::Approx(0.38).epsilon(1e-15));
  CHECK(g.gamma_total[0] == doctest::Approx(0.73).epsilon(1e-15));

  auto zero = fixtures::symmetric();
  const auto g0 = derive_gamma(zero, derive_beta(zero));
  CHECK(g0.gamma.values() == derive_beta(zero).values());

  auto cancel = fixtures::symmetric();
  cancel.aggregators[0].competition_weights["b2"] = 1.0;
  cancel.aggregators[1].competition_weights["b1"] = 1.0;
  const auto gc = derive_gamma(cancel, derive_beta(cancel));
  for (double v : gc.gamma.values()) CHECK(v == 0.0);
  const auto report = validate_scenario(cancel);
  CHECK(report.has("nonpositive_demand"));
  bool named = false;
  for (const auto& v : report.violations) named |= v.message.find("nonpositive demand (s1,b1)") != std::string::npos;
  CHECK(named);
}

TEST_CASE("payment scale divides demand and is noted") {
  auto sc = fixtures::symmetric();
  sc.aggregators[0].payment_scale = 2.0;
  const auto g = derive_gamma(sc, derive_beta(sc));
  CHECK(g.gamma.at(0, 0) == 0.5);
  CHECK(g.gamma.at(0, 1) == 1.0);
  CHECK_FALSE(validate_scenario(sc).notes.empty());
}

TEST_CASE("xi matrix examples") {
  const auto p = derive_parameters(fixtures::symmetric());
  const Eigen::MatrixXd& m = p.xi_matrix.matrix;
  REQUIRE(m.rows() == 4);
  for (Eigen::Index r = 0; r < 4; ++r) {
    int halves = 0;
    for (Eigen::Index c = 0; c < 4; ++c) {
      if (m(r, c) == 0.5) ++halves;
      else CHECK(m(r, c) == 0.0);
    }
    CHECK(halves == 1);
    // (s,b) pairs with (s',b'): both coordinates differ.
    const auto [s, b] = p.xi_matrix.index[static_cast<std::size_t>(r)];
    for (Eigen::Index c = 0; c < 4; ++c) {
      if (m(r, c) == 0.5) {
        CHECK(p.xi_matrix.index[static_cast<std::size_t>(c)].source != s);
        CHECK(p.xi_matrix.index[static_cast<std::size_t>(c)].aggregator != b);
      }
    }
  }

  const auto one_agg = derive_parameters(symmetric_direct_scenario(3, 1, 1.0, 0.4, EffortVarianceModel::exponential(1, 0.5)));
  CHECK(one_agg.xi_matrix.matrix.isZero(0.0));
  const auto one_src = derive_parameters(symmetric_direct_scenario(1, 3, 1.0, 0.4, EffortVarianceModel::exponential(1, 0.5)));
  CHECK(one_src.xi_matrix.matrix.isZero(0.0));
}

TEST_CASE("xi matrix is nonnegative with a zero block diagonal") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    GeneratorSpec spec;
    spec.num_sources = 5 + seed % 4;
    spec.num_aggregators = 1 + seed % 4;
    spec.sharing_density = seed % 2 ? 0.7 : 1.0;
    const auto sc = generate_scenario(spec, seed).scenario;
    const auto p = derive_parameters(sc);
    const auto& m = p.xi_matrix.matrix;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        CHECK(m(r, c) >= 0.0);
        const auto pr = p.xi_matrix.index[static_cast<std::size_t>(r)];
        const auto pc = p.xi_matrix.index[static_cast<std::size_t>(c)];
        if (pr.source == pc.source || pr.aggregator == pc.aggregator) CHECK(m(r, c) == 0.0);
      }
    }
  }
}

TEST_CASE("direct mode reproduces estimator-derived parameters") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    GeneratorSpec spec;
    spec.num_sources = 4 + seed % 4;
    spec.num_aggregators = 2 + seed % 2;
    spec.dimension = 1 + seed % 2;
    spec.sharing_density = 0.8;
    const auto est = generate_scenario(spec, seed).scenario;
    const auto p = derive_parameters(est);

    MarketScenario dir = est;
    dir.mode = ParameterMode::direct;
    for (const auto& [s, b] : p.structure.pairs()) {
      dir.direct.beta[p.aggregator_ids[b]][p.source_ids[s]] = p.beta.at(s, b);
    }
    for (std::size_t b = 0; b < p.aggregator_ids.size(); ++b) {
      for (std::size_t i : p.structure.members(b)) {
        for (std::size_t l : p.structure.members(b)) {
          dir.direct.xi[p.aggregator_ids[b]][p.source_ids[i]][p.source_ids[l]] = p.xi.at(b, i, l);
        }
      }
    }
    const auto q = derive_parameters(dir);
    CHECK(q.gamma.values() == p.gamma.values());
    CHECK(q.xi_matrix.matrix == p.xi_matrix.matrix);
  }
}

TEST_CASE("partial sharing removes pairs without touching other entries") {
  auto all_single = symmetric_direct_scenario(3, 2, 1.0, 0.3, EffortVarianceModel::exponential(1, 0.5));
  auto flipped = all_single;
  flipped.sources[0].sharing_set = {"b1"};
  const auto full = derive_parameters(all_single);
  const auto part = derive_parameters(flipped);
  CHECK(part.structure.num_pairs() == full.structure.num_pairs() - 1);
  for (std::size_t r = 0; r < part.xi_matrix.index.size(); ++r) {
    for (std::size_t c = 0; c < part.xi_matrix.index.size(); ++c) {
      const auto pr = part.xi_matrix.index[r], pc = part.xi_matrix.index[c];
      if (pr.source == 0 || pc.source == 0) continue;
      const auto fr = *full.structure.pair_index(pr.source, pr.aggregator);
      const auto fc = *full.structure.pair_index(pc.source, pc.aggregator);
      CHECK(part.xi_matrix.matrix(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) ==
            full.xi_matrix.matrix(static_cast<Eigen::Index>(fr), static_cast<Eigen::Index>(fc)));
    }
  }
}

TEST_CASE("validation examples") {
  CHECK(validate_scenario(fixtures::symmetric()).ok());

  auto mixed = fixtures::symmetric();
  mixed.sources[0].effort_model = EffortVarianceModel::exponential(1.0, 0.5, EffortSet::bounded(5.0));
  const auto r = validate_scenario(mixed);
  CHECK(r.has("mixed_effort_kinds"));
  CHECK(r.violations.front().message.find("mixed effort-set kinds") != std::string::npos);

  auto low = fixtures::symmetric();
  low.sources[0].effort_model = EffortVarianceModel::exponential(1.0, 0.1);  // a_lower = 5 > 2
  CHECK(validate_scenario(low).has("insufficient_demand"));

  auto capped = fixtures::symmetric(0.5, EffortSet::bounded(std::log(4.0) / 2));  // a_upper = 2 = demand
  CHECK(validate_scenario(capped).has("demand_above_cap"));

  auto diag = fixtures::symmetric();
  diag.direct.xi["b1"]["s1"]["s1"] = 0.9;
  CHECK(validate_scenario(diag).has("xi_diagonal"));

  auto neg = fixtures::symmetric();
  neg.direct.xi["b1"]["s1"]["s2"] = -0.1;
  CHECK(validate_scenario(neg).has("xi_negative"));

  auto self = fixtures::symmetric();
  self.aggregators[0].competition_weights["b1"] = 0.1;
  CHECK(validate_scenario(self).has("zeta_self"));

  auto unknown = fixtures::symmetric();
  unknown.sources[0].sharing_set.push_back("b9");
  CHECK(validate_scenario(unknown).has("unknown_aggregator"));

  auto probs = fixtures::ols_scenario(line_points({0, 1, 2, 3}), 1, {QueryDistribution{{{{0.0}, 0.5}, {{1.0}, 0.4}}}});
  CHECK(validate_scenario(probs).has("query_distribution"));

  CHECK(validate_scenario(MarketScenario{}).has("empty_market"));
}
