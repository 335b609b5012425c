// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "datamarket/effort_models.hpp"
#include "datamarket/equilibrium.hpp"
#include "datamarket/errors.hpp"
#include "datamarket/estimators.hpp"
#include "datamarket/generator.hpp"
#include "datamarket/market.hpp"
#include "datamarket/rng.hpp"
#include "datamarket/simulation.hpp"
#include "datamarket/welfare.hpp"

using namespace datamarket;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool condition, const std::string& what) {
    if (!condition && pass) {
      pass = false;
      detail << "first failure: " << what << "; ";
    }
  }
};

int g_failures = 0;

void report(int id, const std::string& title, const std::function<void(Outcome&)>& body) {
  Outcome o;
  try {
    body(o);
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail << "exception: " << e.what();
  }
  if (!o.pass) ++g_failures;
  std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << ": " << title << " [" << o.detail.str() << "]"
            << std::endl;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

MarketScenario symmetric(double xi_off = 0.5) {
  return symmetric_direct_scenario(2, 2, 1.0, xi_off, EffortVarianceModel::exponential(1.0, 0.5));
}

double eigen_radius(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  return Eigen::EigenSolver<Eigen::MatrixXd>(m, false).eigenvalues().cwiseAbs().maxCoeff();
}

double golden_section(const std::function<double(double)>& f, double lo, double hi) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
  double f1 = f(x1), f2 = f(x2);
  while (hi - lo > 1e-11) {
    if (f1 < f2) {
      hi = x2, x2 = x1, f2 = f1;
      x1 = hi - g * (hi - lo), f1 = f(x1);
    } else {
      lo = x1, x1 = x2, f1 = f2;
      x2 = lo + g * (hi - lo), f2 = f(x2);
    }
  }
  return 0.5 * (lo + hi);
}

struct Solved {
  DerivedParameters params;
  EquilibriumResult result;
};

// Direct-mode scenarios with N, M <= 4 and couplings spanning both sides of rho = 1.
std::vector<DerivedParameters> direct_population() {
  std::vector<DerivedParameters> out;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    GeneratorSpec spec;
    spec.mode = ParameterMode::direct;
    spec.num_sources = 1 + seed % 4;
    spec.num_aggregators = 1 + (seed / 4) % 4;
    spec.coupling_scale = 0.1 + 0.15 * static_cast<double>(seed % 10);
    spec.sharing_density = seed % 3 == 2 ? 0.6 : 1.0;
    spec.family = seed % 2 ? "inverse_power" : "exponential";
    out.push_back(derive_parameters(generate_scenario(spec, 1000 + seed).scenario));
  }
  return out;
}

// Bounded scenarios: half direct, half estimator-derived.
std::vector<DerivedParameters> bounded_population() {
  std::vector<DerivedParameters> out;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    GeneratorSpec spec;
    spec.bounded = true;
    spec.family = seed % 4 < 2 ? "exponential" : "inverse_power";
    if (seed % 2 == 0) {
      spec.mode = ParameterMode::direct;
      spec.num_sources = 1 + seed % 5;
      spec.num_aggregators = 1 + (seed / 2) % 4;
      spec.coupling_scale = 0.1 + 0.1 * static_cast<double>(seed % 6);
    } else {
      spec.num_sources = 4 + seed % 5;
      spec.num_aggregators = 1 + (seed / 2) % 3;
    }
    out.push_back(derive_parameters(generate_scenario(spec, 2000 + seed).scenario));
  }
  return out;
}

// Estimator-derived scenarios with N >= d + 2 and rho(Xi) < 1.
std::vector<std::pair<MarketScenario, DerivedParameters>> estimator_population(std::size_t count) {
  struct Shape {
    std::size_t n, m, d;
  };
  const std::vector<Shape> shapes{{6, 2, 1}, {8, 2, 1}, {10, 2, 1}, {8, 3, 1}, {12, 3, 2}, {8, 2, 2}};
  std::vector<std::pair<MarketScenario, DerivedParameters>> out;
  for (std::uint64_t seed = 0; out.size() < count; ++seed) {
    const Shape& sh = shapes[seed % shapes.size()];
    GeneratorSpec spec;
    spec.num_sources = sh.n;
    spec.num_aggregators = sh.m;
    spec.dimension = sh.d;
    spec.family = seed % 2 ? "inverse_power" : "exponential";
    spec.require_existence = true;
    auto sc = generate_scenario(spec, 3000 + seed).scenario;
    auto p = derive_parameters(sc);
    out.emplace_back(std::move(sc), std::move(p));
  }
  return out;
}

}  // namespace

int main() {
  std::cout.setf(std::ios::unitbuf);
  const auto direct = direct_population();
  const auto bounded = bounded_population();
  std::vector<Solved> direct_solved, bounded_solved;

  report(1, "single aggregator: a = gamma and PoA = 1", [](Outcome& o) {
    std::size_t count = 0;
    for (std::uint64_t seed = 0; count < 50; ++seed) {
      GeneratorSpec spec;
      spec.num_aggregators = 1;
      spec.dimension = 1 + seed % 2;
      spec.num_sources = spec.dimension + 2 + seed % 6;
      spec.family = seed % 2 ? "inverse_power" : "exponential";
      if (seed % 3 == 0) spec.mode = ParameterMode::direct;
      const auto p = derive_parameters(generate_scenario(spec, seed).scenario);
      const auto r = solve_unbounded(p);
      o.require(r.point.has_value(), "scenario " + std::to_string(seed) + " unsolved");
      if (!r.point) continue;
      double worst = 0.0;
      for (std::size_t k = 0; k < p.gamma.values().size(); ++k) {
        worst = std::max(worst, std::abs(r.point->a.values()[k] - p.gamma.values()[k]));
      }
      o.require(worst <= 1e-10, "|a - gamma| = " + fmt(worst));
      const double poa = price_of_anarchy(r, p).poa;
      o.require(std::abs(poa - 1.0) <= 1e-9, "PoA = " + fmt(poa));
      ++count;
    }
    o.detail << count << " scenarios";
  });

  report(2, "Leontief fixed point and existence dichotomy", [&](Outcome& o) {
    std::size_t exist = 0, none = 0;
    double worst = 0.0;
    for (const auto& p : direct) {
      const auto r = solve_unbounded(p);
      const double rho = eigen_radius(p.xi_matrix.matrix);
      const bool expect = rho < 1.0 - kRhoMargin;
      o.require((r.status == EquilibriumStatus::unique_a_infinite_c) == expect,
                "status " + to_string(r.status) + " at rho = " + fmt(rho));
      if (!r.point) {
        ++none;
        continue;
      }
      ++exist;
      const Eigen::VectorXd a = to_vector(r.point->a), g = to_vector(p.gamma);
      const double res = (a - (p.xi_matrix.matrix * a + g)).lpNorm<Eigen::Infinity>();
      worst = std::max(worst, res);
      o.require(res < 1e-9, "fixed-point residual " + fmt(res));
      direct_solved.push_back({p, r});
    }
    o.require(exist > 0 && none > 0, "both regimes must occur");
    const auto fp = derive_parameters(symmetric());
    const auto fr = solve(fp);
    o.require(fr.point.has_value(), "fixture unsolved");
    for (double v : fr.point->a.values()) o.require(v == 2.0, "fixture a = " + fmt(v));
    o.require(std::abs(fr.diagnostics.spectral_radius - 0.5) <= 1e-10, "fixture rho = " + fmt(fr.diagnostics.spectral_radius));
    direct_solved.push_back({fp, fr});
    o.detail << exist << " solved, " << none << " without equilibrium, max residual " << fmt(worst)
             << ", fixture a = 2, rho = " << fmt(fr.diagnostics.spectral_radius);
  });

  // Bounded solves are shared by criteria 3 and 6.
  std::vector<std::string> bounded_errors;
  for (const auto& p : bounded) {
    try {
      bounded_solved.push_back({p, solve_bounded(p)});
    } catch (const std::exception& e) {
      bounded_errors.push_back(e.what());
    }
  }

  report(3, "certification accepts solutions and rejects corrupted ones", [&](Outcome& o) {
    CertifyOptions opts;
    opts.grid_radius = 0.5;
    opts.grid_points = 11;
    std::size_t certified = 0, rejected = 0;
    std::vector<const Solved*> all;
    for (const auto& s : direct_solved) all.push_back(&s);
    for (const auto& s : bounded_solved) all.push_back(&s);
    for (const Solved* s : all) {
      const auto cert = certify_equilibrium(s->result, s->params, opts);
      std::string failed;
      for (const auto& c : cert.checks) {
        if (!c.passed) failed += c.name + " ";
      }
      o.require(cert.certified, "solution not certified: " + failed);
      certified += cert.certified;
      const std::size_t k = s->result.point->a.values().size() / 2;
      for (double delta : {0.1, -0.1}) {
        auto bad = s->result;
        bad.point->a.values()[k] += delta;
        const bool accepted = certify_equilibrium(bad, s->params, opts).certified;
        o.require(!accepted, "corrupted a accepted");
        rejected += !accepted;
      }
    }
    o.detail << certified << "/" << all.size() << " certified, " << rejected << "/" << 2 * all.size()
             << " corruptions rejected";
  });

  report(4, "IR binds at canonical c analytically and in simulation", [&](Outcome& o) {
    double worst = 0.0;
    std::size_t scenarios = 0;
    auto analytic = [&](const Solved& s) {
      const auto pay = expected_payments(s.result.point->canonical_c, s.result.point->a, s.params);
      std::vector<double> sums(s.params.source_ids.size(), 0.0);
      for (const auto& [src, b] : s.params.structure.pairs()) sums[src] += pay.at(src, b);
      for (std::size_t src = 0; src < sums.size(); ++src) {
        const double gap = std::abs(sums[src] - s.result.point->efforts[src]);
        worst = std::max(worst, gap);
        o.require(gap <= 1e-9, "analytic IR gap " + fmt(gap));
      }
      ++scenarios;
    };
    for (const auto& s : direct_solved) analytic(s);
    for (const auto& s : bounded_solved) analytic(s);

    double worst_z = 0.0;
    std::size_t checked = 0;
    const auto pop = estimator_population(3);
    for (std::size_t k = 0; k < pop.size(); ++k) {
      const auto& [sc, p] = pop[k];
      const auto r = solve(p);
      analytic({p, r});
      const MarketSimulator sim(sc, p, r);
      const auto rounds = sim.run(100000, 77 + k);
      const auto summary = summarize_payments(rounds, p, r);
      for (std::size_t s = 0; s < summary.expected.size(); ++s) {
        const double z = std::abs(summary.mean_total_payment[s] - summary.expected[s]) / summary.standard_error[s];
        worst_z = std::max(worst_z, z);
        o.require(z <= 3.0, p.source_ids[s] + " off by " + fmt(z) + " standard errors");
        ++checked;
      }
    }
    o.detail << scenarios << " scenarios, max analytic gap " << fmt(worst) << "; " << checked
             << " simulated sources at 1e5 rounds, max |z| " << fmt(worst_z);
  });

  report(5, "efficiency iff decoupled", [](Outcome& o) {
    double worst_diag = 0.0, least_gap = INFINITY;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      GeneratorSpec spec;
      spec.mode = ParameterMode::direct;
      spec.num_sources = 1 + seed % 4;
      spec.num_aggregators = 1 + (seed / 4) % 4;
      spec.coupling_scale = 0.0;
      spec.sharing_density = seed % 2 ? 0.7 : 1.0;
      spec.bounded = seed % 3 == 0;
      const auto p = derive_parameters(generate_scenario(spec, 4000 + seed).scenario);
      const auto w = price_of_anarchy(solve(p), p);
      worst_diag = std::max(worst_diag, std::abs(w.poa - 1.0));
      o.require(std::abs(w.poa - 1.0) <= 1e-9, "diagonal PoA = " + fmt(w.poa));
      o.require(w.efficient_possible, "diagonal scenario not flagged efficient");
    }
    // One off-diagonal xi couples a low-demand source to a high-demand one:
    // xi^{b1}_{s2,s1} enters the best response of b2 for s1.
    Rng rng(5);
    for (int t = 0; t < 20; ++t) {
      const double xi = t == 0 ? 1e-3 : t == 1 ? 0.5 : rng.uniform(1e-3, 0.5);
      auto sc = symmetric_direct_scenario(2, 2, 1.0, 0.0, EffortVarianceModel::exponential(1.0, 0.5));
      sc.direct.beta["b1"]["s1"] = rng.uniform(0.2, 0.5);
      sc.direct.beta["b2"]["s1"] = rng.uniform(0.2, 0.5);
      sc.direct.beta["b1"]["s2"] = rng.uniform(20.0, 50.0);
      sc.direct.beta["b2"]["s2"] = rng.uniform(0.5, 2.0);
      sc.direct.xi["b1"]["s2"]["s1"] = xi;
      for (auto& src : sc.sources) {
        const double demand = sc.direct.beta["b1"][src.id] + sc.direct.beta["b2"][src.id];
        const double sigma0 = rng.uniform(0.5, 2.0);
        const double a_lower = rng.uniform(0.2, 0.9) * demand;
        src.effort_model = EffortVarianceModel::exponential(sigma0, 1.0 / (2.0 * a_lower * sigma0 * sigma0));
      }
      const auto p = derive_parameters(sc);
      o.require(validate_scenario(sc).ok(), "coupled scenario invalid");
      const auto w = price_of_anarchy(solve(p), p);
      least_gap = std::min(least_gap, w.poa - 1.0);
      o.require(w.poa > 1.0 + 1e-6, "coupled PoA = " + fmt(w.poa) + " at xi = " + fmt(xi));
      o.require(!w.efficient_possible, "coupled scenario flagged efficient");
    }
    const auto fp = derive_parameters(symmetric());
    const double poa = price_of_anarchy(solve(fp), fp).poa;
    const double closed = (0.5 + std::log(4.0)) / (1.0 + std::log(2.0));
    o.require(std::abs(poa - closed) <= 1e-3, "fixture PoA = " + fmt(poa));
    o.detail << "max |PoA - 1| decoupled " << fmt(worst_diag) << ", min PoA - 1 coupled " << fmt(least_gap)
             << ", fixture PoA " << fmt(poa) << " vs " << fmt(closed);
  });

  report(6, "bounded solver converges, certifies and agrees with the unbounded solver", [&](Outcome& o) {
    o.require(bounded_errors.empty(), bounded_errors.empty() ? "" : bounded_errors.front());
    std::size_t interior = 0, max_iter = 0;
    double worst_res = 0.0, worst_gap = 0.0;
    for (const auto& s : bounded_solved) {
      max_iter = std::max(max_iter, s.result.diagnostics.iterations);
      o.require(s.result.diagnostics.iterations <= 100000, "iteration budget exceeded");
      const auto cert = certify_equilibrium(s.result, s.params);
      const double res = cert.find("stationarity")->worst;
      worst_res = std::max(worst_res, res);
      o.require(res < 1e-8, "branch residual " + fmt(res));
      if (cert.clamped_pairs == 0) {
        ++interior;
        const auto u = solve_unbounded(with_unbounded_efforts(s.params));
        o.require(u.point.has_value(), "interior bounded solution but no unbounded equilibrium");
        if (!u.point) continue;
        const double gap = (to_vector(s.result.point->a) - to_vector(u.point->a)).lpNorm<Eigen::Infinity>();
        worst_gap = std::max(worst_gap, gap);
        o.require(gap <= 1e-8, "bounded/unbounded gap " + fmt(gap));
      }
    }
    o.detail << bounded_solved.size() << "/" << bounded.size() << " converged (max " << max_iter
             << " iterations), max branch residual " << fmt(worst_res) << ", " << interior
             << " without active clamps, max gap " << fmt(worst_gap);
  });

  report(7, "blow-up as rho approaches 1", [](Outcome& o) {
    const auto p = derive_parameters(symmetric());
    const std::vector<double> alphas{0.5, 1.0, 1.5, 1.9, 1.99, 1.998, 1.999, 1.9999, 1.99999};
    const auto rows = alpha_sweep(p, alphas);
    double worst_rel = 0.0;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const double closed = 2.0 / (1.0 - 0.5 * alphas[k]);
      const double rel = std::abs(rows[k].max_a_total - closed) / closed;
      worst_rel = std::max(worst_rel, rel);
      o.require(rel <= 1e-6, "alpha " + fmt(alphas[k]) + " relative error " + fmt(rel));
      if (k > 0) o.require(rows[k].max_a_total > rows[k - 1].max_a_total, "not increasing at alpha " + fmt(alphas[k]));
      if (rows[k].rho > 0.999) o.require(rows[k].max_a_total > 1e3, "max a_total " + fmt(rows[k].max_a_total) + " at rho " + fmt(rows[k].rho));
    }
    o.detail << "max a_total " << fmt(rows.back().max_a_total) << " at rho " << fmt(rows.back().rho)
             << ", max relative error " << fmt(worst_rel);
  });

  report(8, "estimator separability by Monte Carlo", [](Outcome& o) {
    Rng rng(8);
    double worst_z = 0.0;
    for (int t = 0; t < 20; ++t) {
      const std::size_t d = 1 + static_cast<std::size_t>(t % 3);
      const std::size_t n = d + 2 + rng.uniform_int(0, 6 - d);
      std::vector<FeaturePoint> pts(n, FeaturePoint(d));
      for (auto& p : pts)
        for (auto& x : p) x = rng.uniform(-1.0, 1.0);
      QueryDistribution q;
      const std::size_t atoms = 1 + rng.uniform_int(0, 2);
      for (std::size_t a = 0; a < atoms; ++a) {
        FeaturePoint x(d);
        for (auto& v : x) v = rng.uniform(-1.5, 1.5);
        q.atoms.push_back({x, 1.0 / static_cast<double>(atoms)});
      }
      std::vector<double> var(n);
      for (auto& v : var) v = rng.uniform(0.1, 2.0);
      LinearFunction f{std::vector<double>(d), rng.uniform(-1.0, 1.0)};
      for (auto& c : f.coefficients) c = rng.uniform(-1.0, 1.0);
      const auto r = validate_separability(pts, q, var, f, 100000, 500 + static_cast<std::uint64_t>(t));
      const double z = std::abs(r.mc_mse - r.predicted_mse) / r.standard_error;
      worst_z = std::max(worst_z, z);
      o.require(z <= 3.0, "setup " + std::to_string(t) + " off by " + fmt(z) + " standard errors");
    }
    o.detail << "20 setups at 1e5 trials, max |z| " << fmt(worst_z);
  });

  report(9, "effort map properties", [](Outcome& o) {
    Rng rng(9);
    double worst_foc = 0.0, worst_fd = 0.0;
    for (int t = 0; t < 200; ++t) {
      const double sigma0 = rng.uniform(0.3, 3.0), rate = rng.uniform(0.1, 3.0);
      const auto m = t % 2 ? EffortVarianceModel::inverse_power(sigma0, rate) : EffortVarianceModel::exponential(sigma0, rate);
      const double lower = incentive_bounds(m).a_lower;
      double prev = -1.0;
      for (int k = 0; k < 40; ++k) {
        const double a = lower * std::pow(1.25, k) * (1.0 + 1e-9);
        const double e = effort_response(m, a);
        o.require(e > prev, "mu not increasing");
        prev = e;
        const double foc = std::abs(2.0 * a * m.sigma(e) * m.d_sigma(e) + 1.0);
        worst_foc = std::max(worst_foc, foc);
        o.require(foc < 1e-9, "FOC residual " + fmt(foc));
        const double h = 1e-4 * a;
        if (a - h > lower) {
          const double fd = (effort_response(m, a + h) - effort_response(m, a - h)) / (2.0 * h);
          const double an = effort_response_derivative(m, a);
          const double rel = std::abs(fd - an) / std::abs(an);
          worst_fd = std::max(worst_fd, rel);
          o.require(rel < 1e-6, "derivative relative error " + fmt(rel));
        }
      }
    }
    const auto m = EffortVarianceModel::exponential(1.0, 0.5);
    o.require(std::abs(incentive_bounds(m).a_lower - 1.0) <= 1e-12, "a_lower != 1");
    o.require(std::abs(effort_response(m, 4.0) - std::log(4.0)) <= 1e-12, "mu(4) != ln 4");
    o.detail << "max FOC residual " << fmt(worst_foc) << ", max derivative error " << fmt(worst_fd);
  });

  report(10, "partial sharing and polytope dimension", [](Outcome& o) {
    for (const bool estimator : {false, true}) {
      MarketScenario single;
      if (estimator) {
        GeneratorSpec spec;
        spec.num_sources = 8;
        spec.num_aggregators = 2;
        single = generate_scenario(spec, 10).scenario;
      } else {
        single = symmetric_direct_scenario(4, 2, 1.0, 0.3, EffortVarianceModel::exponential(1.0, 0.5));
      }
      for (std::size_t s = 0; s < single.sources.size(); ++s) single.sources[s].sharing_set = {s % 2 ? "b2" : "b1"};
      auto flipped = single;
      flipped.sources[0].sharing_set = {"b1", "b2"};
      if (estimator) {
        // Re-sharing changes the OLS demands; put a_lower below both.
        const auto d1 = derive_parameters(single).gamma_total, d2 = derive_parameters(flipped).gamma_total;
        for (std::size_t s = 0; s < single.sources.size(); ++s) {
          const double a_lower = 0.5 * std::min(d1[s], d2[s]);
          const auto model = EffortVarianceModel::exponential(1.0, 1.0 / (2.0 * a_lower));
          single.sources[s].effort_model = flipped.sources[s].effort_model = model;
        }
      }
      const auto p1 = derive_parameters(single), p2 = derive_parameters(flipped);
      o.require(validate_scenario(single).ok() && validate_scenario(flipped).ok(), "scenario invalid");
      const auto r1 = solve(p1), r2 = solve(p2);
      o.require(r1.point && r2.point, "unsolved");
      if (!r1.point || !r2.point) continue;
      for (auto d : r1.point->polytope.dimension) o.require(d == 0, "dimension " + std::to_string(d) + " with one aggregator");
      for (std::size_t s = 0; s < r2.point->polytope.dimension.size(); ++s) {
        o.require(r2.point->polytope.dimension[s] == (s == 0 ? 1u : 0u), "flipped dimension wrong at source " + std::to_string(s));
      }
      for (std::size_t r = 0; r < p2.xi_matrix.index.size(); ++r) {
        for (std::size_t c = 0; c < p2.xi_matrix.index.size(); ++c) {
          const auto pr = p2.xi_matrix.index[r], pc = p2.xi_matrix.index[c];
          if (pr.source == 0 || pc.source == 0) continue;
          const auto r1i = *p1.structure.pair_index(pr.source, pr.aggregator);
          const auto c1i = *p1.structure.pair_index(pc.source, pc.aggregator);
          o.require(p2.xi_matrix.matrix(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) ==
                        p1.xi_matrix.matrix(static_cast<Eigen::Index>(r1i), static_cast<Eigen::Index>(c1i)),
                    "Xi entry changed away from the flipped source");
        }
      }
    }
    o.detail << "direct and estimator-derived variants";
  });

  report(11, "social optimum matches golden-section minimization", [](Outcome& o) {
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      GeneratorSpec spec;
      spec.mode = seed % 2 ? ParameterMode::direct : ParameterMode::estimator_derived;
      spec.num_sources = 3 + seed % 5;
      spec.num_aggregators = 1 + seed % 3;
      spec.family = seed % 4 < 2 ? "exponential" : "inverse_power";
      spec.bounded = seed % 3 == 0;
      const auto p = derive_parameters(generate_scenario(spec, 5000 + seed).scenario);
      const auto opt = optimal_efforts(p);
      for (std::size_t s = 0; s < opt.size(); ++s) {
        auto f = [&](double e) {
          std::vector<double> efforts = opt;
          efforts[s] = e;
          return social_cost(efforts, p);
        };
        const auto& set = p.models[s].effort_set();
        const double hi = set.is_bounded() ? set.e_max : 10.0 * opt[s] + 10.0;
        const double gap = std::abs(golden_section(f, 0.0, hi) - opt[s]);
        worst = std::max(worst, gap);
        o.require(gap <= 1e-6, "gap " + fmt(gap));
      }
    }
    o.detail << "50 scenarios, max gap " << fmt(worst);
  });

  // A single aggregator has no rivals, so Xi = 0 and the market is efficient
  // (criterion 1); the inefficiency claim concerns competing aggregators.
  report(12, "OLS markets with competing aggregators are inefficient", [](Outcome& o) {
    std::size_t checked = 0, solved = 0;
    double least = INFINITY;
    for (std::uint64_t seed = 0; seed < 60; ++seed) {
      GeneratorSpec spec;
      spec.dimension = 1 + seed % 3;
      spec.num_sources = spec.dimension + 2 + seed % 5;
      spec.num_aggregators = 2 + seed % 3;
      spec.bounded = seed % 2 == 1;
      const auto p = derive_parameters(generate_scenario(spec, 6000 + seed).scenario);
      ++checked;
      o.require(!efficiency_predicate(p), "predicate true for seed " + std::to_string(seed));
      const auto r = solve(p);
      if (!r.point) continue;
      ++solved;
      const double poa = price_of_anarchy(r, p).poa;
      least = std::min(least, poa);
      o.require(poa > 1.0, "PoA = " + fmt(poa) + " for seed " + std::to_string(seed));
    }
    for (const auto& [sc, p] : estimator_population(20)) {
      ++checked;
      o.require(!efficiency_predicate(p), "predicate true");
      const auto r = solve(p);
      o.require(r.point.has_value(), "unsolved despite rho < 1");
      if (!r.point) continue;
      ++solved;
      const double poa = price_of_anarchy(r, p).poa;
      least = std::min(least, poa);
      o.require(poa > 1.0, "PoA = " + fmt(poa));
    }
    o.detail << checked << " scenarios, predicate false on all, " << solved << " solved, min PoA " << fmt(least);
  });

  std::cout << (g_failures == 0 ? "all criteria passed" : std::to_string(g_failures) + " criteria failed") << std::endl;
  return g_failures == 0 ? 0 : 1;
}
