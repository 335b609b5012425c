#include "datamarket/cli.hpp"

#include <algorithm>
#include <functional>
#include <optional>

#include <CLI11.hpp>

#include "datamarket/equilibrium.hpp"
#include "datamarket/errors.hpp"
#include "datamarket/generator.hpp"
#include "datamarket/io.hpp"
#include "datamarket/market.hpp"
#include "datamarket/simulation.hpp"
#include "datamarket/welfare.hpp"

namespace datamarket {

namespace {

struct Context {
  std::ostream& out;
  std::ostream& err;
  std::string out_path;

  void emit(const std::string& text) const {
    if (out_path.empty()) out << text;
    else write_text_file(out_path, text);
  }
};

// Load, validate and derive. Returns nullopt (after reporting) when the
// scenario fails validation.
struct Loaded {
  MarketScenario scenario;
  DerivedParameters params;
};

std::optional<Loaded> load_valid(const std::string& path, const Context& ctx) {
  Loaded l{load_scenario(path), {}};
  const ValidationReport report = validate_scenario(l.scenario);
  if (!report.ok()) {
    for (const auto& v : report.violations) ctx.err << "invalid scenario: " << v.code << ": " << v.message << '\n';
    return std::nullopt;
  }
  l.params = derive_parameters(l.scenario);
  return l;
}

int cmd_validate(const std::string& path, const Context& ctx) {
  const MarketScenario sc = load_scenario(path);
  const ValidationReport report = validate_scenario(sc);
  ctx.emit(serialize_validation(report));
  for (const auto& v : report.violations) ctx.err << v.code << ": " << v.message << '\n';
  return report.ok() ? kExitOk : kExitInvalid;
}

int cmd_derive(const std::string& path, const std::string& xi_csv, const Context& ctx) {
  const auto l = load_valid(path, ctx);
  if (!l) return kExitInvalid;
  ctx.emit(serialize_derived(l->params));
  if (!xi_csv.empty()) write_text_file(xi_csv, xi_matrix_csv(l->params));
  return kExitOk;
}

int cmd_solve(const std::string& path, const BoundedSolverOptions& opts, const Context& ctx) {
  const auto l = load_valid(path, ctx);
  if (!l) return kExitInvalid;
  const EquilibriumResult result = solve(l->params, opts);
  ctx.emit(serialize_result(result, l->params));
  if (result.status == EquilibriumStatus::none) {
    ctx.err << "no equilibrium: spectral radius " << format_double(result.diagnostics.spectral_radius)
            << (result.diagnostics.marginal ? " (marginal)" : "") << '\n';
  }
  return kExitOk;
}

int cmd_certify(const std::string& path, const std::string& result_path, const CertifyOptions& opts,
                const Context& ctx) {
  const auto l = load_valid(path, ctx);
  if (!l) return kExitInvalid;
  const EquilibriumResult result = parse_result(read_text_file(result_path), l->params);
  const Certificate cert = certify_equilibrium(result, l->params, opts);
  ctx.emit(serialize_certificate(cert));
  for (const auto& c : cert.checks) {
    if (!c.passed) ctx.err << "check failed: " << c.name << (c.detail.empty() ? "" : ": " + c.detail) << '\n';
  }
  return cert.certified ? kExitOk : kExitSolver;
}

int cmd_welfare(const std::string& path, const std::string& result_path, const Context& ctx) {
  const auto l = load_valid(path, ctx);
  if (!l) return kExitInvalid;
  const EquilibriumResult result = parse_result(read_text_file(result_path), l->params);
  if (!result.point) {
    ctx.err << "result has no equilibrium\n";
    return kExitSolver;
  }
  ctx.emit(serialize_welfare(price_of_anarchy(result, l->params), l->params));
  return kExitOk;
}

int cmd_sweep(const std::string& path, const std::vector<double>& alphas, const Context& ctx) {
  const auto l = load_valid(path, ctx);
  if (!l) return kExitInvalid;
  ctx.emit(alpha_sweep_csv(alpha_sweep(l->params, alphas)));
  return kExitOk;
}

int cmd_simulate(const std::string& path, const std::string& result_path, std::size_t rounds, std::uint64_t seed,
                 const Context& ctx) {
  const auto l = load_valid(path, ctx);
  if (!l) return kExitInvalid;
  const EquilibriumResult result = parse_result(read_text_file(result_path), l->params);
  if (!result.point) {
    ctx.err << "result has no equilibrium\n";
    return kExitSolver;
  }
  const MarketSimulator sim(l->scenario, l->params, result);
  const auto all = sim.run(rounds, seed);
  ctx.emit(rounds_csv(all, l->params));
  const PaymentSummary summary = summarize_payments(all, l->params, result);
  for (std::size_t s = 0; s < summary.expected.size(); ++s) {
    ctx.err << l->params.source_ids[s] << ": mean total payment " << format_double(summary.mean_total_payment[s])
            << " (se " << format_double(summary.standard_error[s]) << "), effort "
            << format_double(summary.expected[s]) << '\n';
  }
  return kExitOk;
}

int cmd_generate(const GeneratorSpec& spec, std::uint64_t seed, const Context& ctx) {
  const GeneratedScenario g = generate_scenario(spec, seed);
  ctx.emit(serialize_scenario(g.scenario));
  ctx.err << "generated after " << g.attempts << " attempt(s)\n";
  return kExitOk;
}

int guarded(const std::function<int()>& fn, std::ostream& err) {
  try {
    return fn();
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const GenerationError& e) {
    err << "generation failed after " << e.attempts() << " attempt(s): " << e.what() << '\n';
    return kExitInvalid;
  } catch (const NonConvergenceError& e) {
    err << "solver failure: " << e.what() << " (residual " << format_double(e.residual()) << ")\n";
    return kExitSolver;
  } catch (const NumericalFailureError& e) {
    err << "solver failure: " << e.what() << '\n';
    return kExitSolver;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Equilibrium solver and simulator for competitive data markets", "datamarket"};
  app.require_subcommand(1);
  std::string out_path;
  std::function<int()> action;

  std::string scenario, result_path, xi_csv;

  auto* validate = app.add_subcommand("validate", "Check a scenario for well-posedness");
  validate->add_option("scenario", scenario, "Scenario document")->required();
  validate->add_option("--out", out_path, "Write the report here instead of stdout");
  validate->callback([&] { action = [&] { return cmd_validate(scenario, {out, err, out_path}); }; });

  auto* derive = app.add_subcommand("derive", "Emit beta, xi, gamma and the coupling matrix");
  derive->add_option("scenario", scenario, "Scenario document")->required();
  derive->add_option("--out", out_path, "Write the tables here instead of stdout");
  derive->add_option("--xi-csv", xi_csv, "Also write the coupling matrix as CSV");
  derive->callback([&] { action = [&] { return cmd_derive(scenario, xi_csv, {out, err, out_path}); }; });

  BoundedSolverOptions solver_opts;
  auto* solve_cmd = app.add_subcommand("solve", "Compute an equilibrium");
  solve_cmd->add_option("scenario", scenario, "Scenario document")->required();
  solve_cmd->add_option("--bounded-damping", solver_opts.damping, "Damping of the bounded best-response iteration")
      ->check(CLI::Range(0.0, 1.0));
  solve_cmd->add_option("--max-iter", solver_opts.max_iter, "Iteration budget of the bounded solver");
  solve_cmd->add_option("--tol", solver_opts.tol, "Convergence tolerance of the bounded solver");
  solve_cmd->add_option("--out", out_path, "Write the result here instead of stdout");
  solve_cmd->callback([&] { action = [&] { return cmd_solve(scenario, solver_opts, {out, err, out_path}); }; });

  CertifyOptions cert_opts;
  auto* certify = app.add_subcommand("certify", "Verify an equilibrium result");
  certify->add_option("scenario", scenario, "Scenario document")->required();
  certify->add_option("result", result_path, "Result document from solve")->required();
  certify->add_option("--grid-radius", cert_opts.grid_radius, "Half-width of the perturbation grid");
  certify->add_option("--grid-points", cert_opts.grid_points, "Grid points per coordinate");
  certify->add_option("--out", out_path, "Write the certificate here instead of stdout");
  certify->callback(
      [&] { action = [&] { return cmd_certify(scenario, result_path, cert_opts, {out, err, out_path}); }; });

  auto* welfare = app.add_subcommand("welfare", "Social cost and price of anarchy of a result");
  welfare->add_option("scenario", scenario, "Scenario document")->required();
  welfare->add_option("result", result_path, "Result document from solve")->required();
  welfare->add_option("--out", out_path, "Write the report here instead of stdout");
  welfare->callback([&] { action = [&] { return cmd_welfare(scenario, result_path, {out, err, out_path}); }; });

  std::vector<double> alphas;
  auto* sweep = app.add_subcommand("sweep-alpha", "Solve with the coupling matrix scaled by each alpha");
  sweep->add_option("scenario", scenario, "Scenario document")->required();
  sweep->add_option("--alphas", alphas, "Comma-separated scale factors")->required()->delimiter(',');
  sweep->add_option("--out", out_path, "Write the CSV here instead of stdout");
  sweep->callback([&] { action = [&] { return cmd_sweep(scenario, alphas, {out, err, out_path}); }; });

  std::size_t rounds = 1000;
  std::uint64_t seed = 0;
  auto* simulate = app.add_subcommand("simulate", "Simulate realized market rounds at a result's contracts");
  simulate->add_option("scenario", scenario, "Scenario document")->required();
  simulate->add_option("result", result_path, "Result document from solve")->required();
  simulate->add_option("--rounds", rounds, "Number of rounds")->check(CLI::PositiveNumber);
  simulate->add_option("--seed", seed, "Seed (decimal unsigned integer)");
  simulate->add_option("--out", out_path, "Write the CSV here instead of stdout");
  simulate->callback(
      [&] { action = [&] { return cmd_simulate(scenario, result_path, rounds, seed, {out, err, out_path}); }; });

  GeneratorSpec gen;
  std::string mode = "estimator_derived";
  auto* generate = app.add_subcommand("generate", "Draw a random valid scenario");
  generate->add_option("--n", gen.num_sources, "Number of sources");
  generate->add_option("--m", gen.num_aggregators, "Number of aggregators");
  generate->add_option("--d", gen.dimension, "Feature dimension");
  generate->add_option("--family", gen.family, "Variance family")
      ->check(CLI::IsMember({"exponential", "inverse_power"}));
  generate->add_flag("--bounded", gen.bounded, "Give every source a bounded effort set");
  generate->add_option("--coupling-scale", gen.coupling_scale, "Upper end of off-diagonal xi (direct mode)");
  generate->add_option("--sharing-density", gen.sharing_density, "Probability a source shares with an aggregator");
  generate->add_option("--mode", mode, "Parameter mode")->check(CLI::IsMember({"estimator_derived", "direct"}));
  generate->add_flag("--require-existence", gen.require_existence, "Retry until the coupling matrix has spectral radius below 1");
  generate->add_option("--max-attempts", gen.max_attempts, "Retry budget");
  generate->add_option("--seed", seed, "Seed (decimal unsigned integer)");
  generate->add_option("--out", out_path, "Write the scenario here instead of stdout");
  generate->callback([&] {
    gen.mode = mode == "direct" ? ParameterMode::direct : ParameterMode::estimator_derived;
    action = [&] { return cmd_generate(gen, seed, {out, err, out_path}); };
  });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }
  if (!action) {
    err << "usage error: no command given\n";
    return kExitUsage;
  }
  return guarded(action, err);
}

}  // namespace datamarket
