#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "datamarket/cli.hpp"
#include "datamarket/effort_models.hpp"
#include "datamarket/equilibrium.hpp"
#include "datamarket/errors.hpp"
#include "datamarket/estimators.hpp"
#include "datamarket/generator.hpp"
#include "datamarket/io.hpp"
#include "datamarket/market.hpp"
#include "datamarket/welfare.hpp"

namespace py = pybind11;
using namespace datamarket;

namespace {

// {(source_id, aggregator_id): value}
py::dict pair_dict(const PairTable& table, const DerivedParameters& p) {
  py::dict out;
  for (const auto& [s, b] : p.structure.pairs()) {
    out[py::make_tuple(p.source_ids[s], p.aggregator_ids[b])] = table.at(s, b);
  }
  return out;
}

QueryDistribution to_query(const std::vector<std::pair<FeaturePoint, double>>& atoms) {
  QueryDistribution q;
  for (const auto& [point, prob] : atoms) q.atoms.push_back({point, prob});
  return q;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Equilibrium solver and simulator for competitive data markets";

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<OutOfRangeError>(m, "OutOfRangeError", base.ptr());
  py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
  py::register_exception<IllDefinedEstimatorError>(m, "IllDefinedEstimatorError", base.ptr());
  py::register_exception<IllDefinedPaymentError>(m, "IllDefinedPaymentError", base.ptr());
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<NumericalFailureError>(m, "NumericalFailureError", base.ptr());
  py::register_exception<NonConvergenceError>(m, "NonConvergenceError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<GenerationError>(m, "GenerationError", base.ptr());

  py::class_<EffortVarianceModel>(m, "EffortVarianceModel")
      .def_static(
          "exponential",
          [](double sigma0, double lambda, std::optional<double> e_max) {
            return EffortVarianceModel::exponential(sigma0, lambda, e_max ? EffortSet::bounded(*e_max) : EffortSet::unbounded());
          },
          py::arg("sigma0"), py::arg("lam"), py::arg("e_max") = py::none())
      .def_static(
          "inverse_power",
          [](double sigma0, double k, std::optional<double> e_max) {
            return EffortVarianceModel::inverse_power(sigma0, k, e_max ? EffortSet::bounded(*e_max) : EffortSet::unbounded());
          },
          py::arg("sigma0"), py::arg("k"), py::arg("e_max") = py::none())
      .def("sigma", &EffortVarianceModel::sigma)
      .def("variance", [](const EffortVarianceModel& self, double e) { return variance_at(self, e); })
      .def("effort", [](const EffortVarianceModel& self, double a) { return effort_response(self, a); },
           py::arg("a_total"))
      .def("effort_derivative",
           [](const EffortVarianceModel& self, double a) { return effort_response_derivative(self, a); },
           py::arg("a_total"))
      .def_property_readonly("bounds",
                             [](const EffortVarianceModel& self) {
                               const auto b = incentive_bounds(self);
                               return py::make_tuple(b.a_lower, b.a_upper);
                             })
      .def_property_readonly("family", &EffortVarianceModel::family_name);

  py::class_<MarketScenario>(m, "Scenario")
      .def("to_json", [](const MarketScenario& self) { return serialize_scenario(self); })
      .def_property_readonly("source_ids",
                             [](const MarketScenario& self) {
                               std::vector<std::string> ids;
                               for (const auto& s : self.sources) ids.push_back(s.id);
                               return ids;
                             })
      .def_property_readonly("aggregator_ids", [](const MarketScenario& self) {
        std::vector<std::string> ids;
        for (const auto& b : self.aggregators) ids.push_back(b.id);
        return ids;
      });

  py::class_<DerivedParameters>(m, "DerivedParameters")
      .def_readonly("source_ids", &DerivedParameters::source_ids)
      .def_readonly("aggregator_ids", &DerivedParameters::aggregator_ids)
      .def_readonly("gamma_total", &DerivedParameters::gamma_total)
      .def_property_readonly("beta", [](const DerivedParameters& p) { return pair_dict(p.beta, p); })
      .def_property_readonly("gamma", [](const DerivedParameters& p) { return pair_dict(p.gamma, p); })
      .def_property_readonly("xi_matrix", [](const DerivedParameters& p) { return p.xi_matrix.matrix; })
      .def_property_readonly("xi_index", [](const DerivedParameters& p) {
        std::vector<std::pair<std::string, std::string>> out;
        for (const auto& [s, b] : p.xi_matrix.index) out.emplace_back(p.source_ids[s], p.aggregator_ids[b]);
        return out;
      });

  py::class_<EquilibriumResult>(m, "EquilibriumResult")
      .def_property_readonly("status", [](const EquilibriumResult& r) { return to_string(r.status); })
      .def_property_readonly("spectral_radius", [](const EquilibriumResult& r) { return r.diagnostics.spectral_radius; })
      .def_property_readonly("marginal", [](const EquilibriumResult& r) { return r.diagnostics.marginal; })
      .def_property_readonly("iterations", [](const EquilibriumResult& r) { return r.diagnostics.iterations; })
      .def_property_readonly("has_equilibrium", [](const EquilibriumResult& r) { return r.point.has_value(); });

  m.def("parse_scenario", &parse_scenario, py::arg("text"));
  m.def("load_scenario", &load_scenario, py::arg("path"));
  m.def(
      "generate_scenario",
      [](std::size_t n, std::size_t m_aggs, std::size_t d, const std::string& family, bool bounded, bool direct,
         double coupling_scale, double sharing_density, bool require_existence, std::uint64_t seed) {
        GeneratorSpec spec;
        spec.num_sources = n;
        spec.num_aggregators = m_aggs;
        spec.dimension = d;
        spec.family = family;
        spec.bounded = bounded;
        spec.mode = direct ? ParameterMode::direct : ParameterMode::estimator_derived;
        spec.coupling_scale = coupling_scale;
        spec.sharing_density = sharing_density;
        spec.require_existence = require_existence;
        return generate_scenario(spec, seed).scenario;
      },
      py::arg("n") = 3, py::arg("m") = 2, py::arg("d") = 1, py::arg("family") = "exponential",
      py::arg("bounded") = false, py::arg("direct") = false, py::arg("coupling_scale") = 0.3,
      py::arg("sharing_density") = 1.0, py::arg("require_existence") = false, py::arg("seed") = 0);

  m.def(
      "validate_scenario",
      [](const MarketScenario& sc) {
        const auto r = validate_scenario(sc);
        py::list violations;
        for (const auto& v : r.violations) violations.append(py::make_tuple(v.code, v.message));
        py::dict out;
        out["ok"] = r.ok();
        out["violations"] = violations;
        out["notes"] = r.notes;
        return out;
      },
      py::arg("scenario"));
  m.def("derive_parameters", &derive_parameters, py::arg("scenario"));

  m.def("spectral_radius", [](const Eigen::MatrixXd& matrix) { return spectral_radius(matrix); }, py::arg("matrix"));
  m.def(
      "ols_coefficients",
      [](const std::vector<FeaturePoint>& points, const std::vector<std::pair<FeaturePoint, double>>& query) {
        return ols_coefficients(points, to_query(query));
      },
      py::arg("points"), py::arg("query"), "query is a list of (point, probability) atoms");

  m.def(
      "solve",
      [](const DerivedParameters& p, double damping, std::size_t max_iter, double tol) {
        return solve(p, BoundedSolverOptions{damping, max_iter, tol});
      },
      py::arg("params"), py::arg("damping") = 0.5, py::arg("max_iter") = 100000, py::arg("tol") = 1e-10);

  m.def(
      "equilibrium",
      [](const EquilibriumResult& r, const DerivedParameters& p) {
        if (!r.point) throw ValidationError("result has no equilibrium");
        py::dict out;
        out["a"] = pair_dict(r.point->a, p);
        out["c"] = pair_dict(r.point->canonical_c, p);
        out["q"] = pair_dict(r.point->polytope.floor, p);
        out["a_total"] = r.point->a_total;
        out["efforts"] = r.point->efforts;
        return out;
      },
      py::arg("result"), py::arg("params"));

  m.def("result_to_json", &serialize_result, py::arg("result"), py::arg("params"));

  m.def(
      "certify",
      [](const EquilibriumResult& r, const DerivedParameters& p, double grid_radius, std::size_t grid_points) {
        CertifyOptions opts;
        opts.grid_radius = grid_radius;
        opts.grid_points = grid_points;
        const auto cert = certify_equilibrium(r, p, opts);
        py::dict checks;
        for (const auto& c : cert.checks) checks[py::str(c.name)] = py::make_tuple(c.passed, c.worst, c.detail);
        py::dict out;
        out["certified"] = cert.certified;
        out["checks"] = checks;
        out["clamped_pairs"] = cert.clamped_pairs;
        return out;
      },
      py::arg("result"), py::arg("params"), py::arg("grid_radius") = 0.5, py::arg("grid_points") = 11);

  m.def(
      "price_of_anarchy",
      [](const EquilibriumResult& r, const DerivedParameters& p) {
        const auto w = price_of_anarchy(r, p);
        py::dict out;
        out["poa"] = w.poa;
        out["cost_at_equilibrium"] = w.cost_at_equilibrium;
        out["cost_at_optimum"] = w.cost_at_optimum;
        out["equilibrium_efforts"] = w.equilibrium_efforts;
        out["optimal_efforts"] = w.optimal_efforts;
        out["efficient_possible"] = w.efficient_possible;
        out["offdiagonal_xi_max"] = w.offdiagonal_xi_max;
        return out;
      },
      py::arg("result"), py::arg("params"));

  m.def(
      "alpha_sweep",
      [](const DerivedParameters& p, const std::vector<double>& alphas) {
        py::list rows;
        for (const auto& r : alpha_sweep(p, alphas)) {
          rows.append(py::make_tuple(r.alpha, r.rho, to_string(r.status), r.max_a_total));
        }
        return rows;
      },
      py::arg("params"), py::arg("alphas"), "rows of (alpha, rho, status, max_a_total)");

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = run_cli(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Run the command-line interface in-process; returns (exit_code, stdout, stderr).");
}
