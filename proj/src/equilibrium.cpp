#include "datamarket/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include "datamarket/errors.hpp"

namespace datamarket {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string number(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string pair_name(const DerivedParameters& p, std::size_t s, std::size_t b) {
  return "(" + p.source_ids[s] + "," + p.aggregator_ids[b] + ")";
}

void check_nonnegative_square(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw DomainError("spectral radius needs a square matrix");
  if (!m.allFinite()) throw DomainError("matrix has non-finite entries");
  if (m.size() > 0 && m.minCoeff() < 0.0) throw DomainError("matrix has negative entries");
}

struct PowerOutcome {
  bool converged = false;
  double value = 0.0;
  std::size_t iterations = 0;
};

// Plain power iteration. Converges when the Collatz-Wielandt bracket closes;
// gives up when an entry of the iterate vanishes or the bracket stops shrinking.
PowerOutcome plain_power(const Eigen::MatrixXd& a, double tol, std::size_t max_iter) {
  const Eigen::Index n = a.rows();
  Eigen::VectorXd x = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  double checkpoint_width = std::numeric_limits<double>::infinity();
  PowerOutcome out;
  for (std::size_t it = 1; it <= max_iter; ++it) {
    const Eigen::VectorXd y = a * x;
    out.iterations = it;
    if (y.maxCoeff() <= 0.0) {
      out.converged = true;
      out.value = 0.0;
      return out;
    }
    if (x.minCoeff() <= 0.0) return out;
    const Eigen::ArrayXd ratio = y.array() / x.array();
    const double lo = ratio.minCoeff(), hi = ratio.maxCoeff();
    if (hi - lo <= tol * std::max(1.0, hi)) {
      out.converged = true;
      out.value = 0.5 * (lo + hi);
      return out;
    }
    if (it % 256 == 0) {
      if (hi - lo > 0.999 * checkpoint_width) return out;
      checkpoint_width = hi - lo;
    }
    x = y / y.sum();
  }
  return out;
}

// Strongly connected components of the graph with an edge i -> j when a(i, j) > 0.
std::vector<std::vector<Eigen::Index>> strong_components(const Eigen::MatrixXd& a) {
  const Eigen::Index n = a.rows();
  std::vector<Eigen::Index> index(static_cast<std::size_t>(n), -1), low(static_cast<std::size_t>(n), 0);
  std::vector<bool> on_stack(static_cast<std::size_t>(n), false);
  std::vector<Eigen::Index> stack;
  std::vector<std::vector<Eigen::Index>> out;
  Eigen::Index counter = 0;
  std::function<void(Eigen::Index)> visit = [&](Eigen::Index v) {
    const auto uv = static_cast<std::size_t>(v);
    index[uv] = low[uv] = counter++;
    stack.push_back(v);
    on_stack[uv] = true;
    for (Eigen::Index w = 0; w < n; ++w) {
      if (a(v, w) <= 0.0) continue;
      const auto uw = static_cast<std::size_t>(w);
      if (index[uw] < 0) {
        visit(w);
        low[uv] = std::min(low[uv], low[uw]);
      } else if (on_stack[uw]) {
        low[uv] = std::min(low[uv], index[uw]);
      }
    }
    if (low[uv] == index[uv]) {
      std::vector<Eigen::Index> comp;
      Eigen::Index w;
      do {
        w = stack.back();
        stack.pop_back();
        on_stack[static_cast<std::size_t>(w)] = false;
        comp.push_back(w);
      } while (w != v);
      out.push_back(std::move(comp));
    }
  };
  for (Eigen::Index v = 0; v < n; ++v) {
    if (index[static_cast<std::size_t>(v)] < 0) visit(v);
  }
  return out;
}

// Power iteration on B = A + cI for an irreducible A, with c the row/column-sum
// upper bound of A. B is primitive, so the Collatz-Wielandt bracket closes.
PowerOutcome shifted_power(const Eigen::MatrixXd& a, double tol, std::size_t max_iter) {
  const Eigen::Index n = a.rows();
  const double shift = std::min(a.rowwise().sum().maxCoeff(), a.colwise().sum().maxCoeff());
  const Eigen::MatrixXd b = a + shift * Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd x = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  PowerOutcome out;
  for (std::size_t it = 1; it <= max_iter; ++it) {
    const Eigen::VectorXd y = b * x;
    out.iterations = it;
    const Eigen::ArrayXd ratio = y.array() / x.array();
    const double lo = ratio.minCoeff() - shift, hi = ratio.maxCoeff() - shift;
    out.value = 0.5 * (lo + hi);
    if (hi - lo <= tol * std::max(1.0, hi)) {
      out.converged = true;
      return out;
    }
    x = y / y.sum();
  }
  return out;
}

void require_kind(const DerivedParameters& params, bool bounded) {
  if (bounded ? !params.all_bounded() : !params.all_unbounded()) {
    throw ValidationError(bounded ? "bounded solver needs every effort set bounded"
                                  : "unbounded solver needs every effort set unbounded");
  }
}

double fixed_point_residual(const DerivedParameters& params, const Eigen::VectorXd& a) {
  const Eigen::VectorXd gamma = to_vector(params.gamma);
  if (a.size() == 0) return 0.0;
  return (a - (params.xi_matrix.matrix * a + gamma)).cwiseAbs().maxCoeff();
}

EquilibriumPoint build_point(const DerivedParameters& params, PairTable a) {
  EquilibriumPoint point;
  point.a_total = total_incentives(a);
  point.efforts = equilibrium_efforts(a, params);
  point.polytope = polytope(a, params);
  point.canonical_c = canonical_c(a, params);
  point.a = std::move(a);
  return point;
}

// sum over i in S_b of sum over l in S_j of a_i^j xi^j_{i,l} sigma_l^2 for j != b,
// plus gamma_i^b sigma_i^2 + mu_i, evaluated at the given efforts.
double reduced_loss_at(std::size_t b, const PairTable& a, const DerivedParameters& params,
                       const std::vector<double>& efforts) {
  const auto& st = params.structure;
  std::vector<double> var(efforts.size());
  for (std::size_t s = 0; s < efforts.size(); ++s) var[s] = variance_at(params.models[s], efforts[s]);
  double loss = 0.0;
  for (std::size_t i : st.members(b)) {
    loss += params.gamma.at(i, b) * var[i] + efforts[i];
    for (std::size_t j : st.sharing(i)) {
      if (j == b) continue;
      double inner = 0.0;
      for (std::size_t l : st.members(j)) inner += params.xi.at(j, i, l) * var[l];
      loss += a.at(i, j) * inner;
    }
  }
  return loss;
}

bool feasible(const PairTable& a, const DerivedParameters& params) {
  for (double v : a.values()) {
    if (v < 0.0) return false;
  }
  const auto totals = total_incentives(a);
  for (std::size_t s = 0; s < totals.size(); ++s) {
    if (!params.bounds[s].contains(totals[s])) return false;
  }
  return true;
}

}  // namespace

std::string to_string(EquilibriumStatus status) {
  switch (status) {
    case EquilibriumStatus::unique_a_infinite_c: return "unique_a_infinite_c";
    case EquilibriumStatus::none: return "none";
    case EquilibriumStatus::converged_bounded: return "converged_bounded";
  }
  return "none";
}

EquilibriumStatus parse_status(const std::string& text) {
  if (text == "unique_a_infinite_c") return EquilibriumStatus::unique_a_infinite_c;
  if (text == "none") return EquilibriumStatus::none;
  if (text == "converged_bounded") return EquilibriumStatus::converged_bounded;
  throw DomainError("unknown equilibrium status " + text);
}

SpectralRadiusEstimate estimate_spectral_radius(const Eigen::MatrixXd& matrix, double tol, std::size_t max_iter) {
  check_nonnegative_square(matrix);
  if (matrix.size() == 0 || matrix.maxCoeff() == 0.0) return {0.0, 0, "zero"};

  const PowerOutcome plain = plain_power(matrix, tol, max_iter);
  if (plain.converged) return {plain.value, plain.iterations, "power"};

  // Reducible or periodic: the radius is the largest over irreducible diagonal blocks.
  double value = 0.0;
  std::size_t iterations = plain.iterations;
  double residual = 0.0;
  bool converged = true;
  for (const auto& comp : strong_components(matrix)) {
    if (comp.size() == 1) {
      value = std::max(value, matrix(comp[0], comp[0]));
      continue;
    }
    const auto k = static_cast<Eigen::Index>(comp.size());
    Eigen::MatrixXd block(k, k);
    for (Eigen::Index i = 0; i < k; ++i)
      for (Eigen::Index j = 0; j < k; ++j) block(i, j) = matrix(comp[static_cast<std::size_t>(i)], comp[static_cast<std::size_t>(j)]);
    const PowerOutcome r = shifted_power(block, tol, max_iter);
    iterations += r.iterations;
    converged = converged && r.converged;
    if (!r.converged) residual = std::max(residual, r.value);
    value = std::max(value, r.value);
  }
  const Eigen::VectorXd rows = matrix.rowwise().sum();
  const Eigen::VectorXd cols = matrix.colwise().sum().transpose();
  const double lower = std::max(rows.minCoeff(), cols.minCoeff());
  const double upper = std::min(rows.maxCoeff(), cols.maxCoeff());
  const double slack = tol * std::max(1.0, upper);
  if (!converged || value < lower - slack || value > upper + slack) {
    throw NonConvergenceError("spectral radius iteration did not settle", {value}, residual, iterations);
  }
  return {std::clamp(value, lower, upper), iterations, "shifted_power"};
}

double spectral_radius(const Eigen::MatrixXd& matrix) { return estimate_spectral_radius(matrix).value; }

Eigen::VectorXd to_vector(const PairTable& table) {
  const auto& v = table.values();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

PairTable from_vector(const MarketStructure& structure, const Eigen::VectorXd& values) {
  if (static_cast<std::size_t>(values.size()) != structure.num_pairs()) {
    throw ShapeError("vector length does not match the number of sharing pairs");
  }
  PairTable out(structure);
  for (std::size_t k = 0; k < structure.num_pairs(); ++k) out.values()[k] = values(static_cast<Eigen::Index>(k));
  return out;
}

std::vector<double> total_incentives(const PairTable& a) {
  const auto& st = a.structure();
  std::vector<double> out(st.num_sources(), 0.0);
  for (std::size_t k = 0; k < st.num_pairs(); ++k) out[st.pairs()[k].source] += a.values()[k];
  return out;
}

std::vector<double> equilibrium_efforts(const PairTable& a, const DerivedParameters& params) {
  const auto totals = total_incentives(a);
  std::vector<double> efforts(totals.size());
  for (std::size_t s = 0; s < totals.size(); ++s) {
    const double t = params.models[s].effort_set().is_bounded() ? params.bounds[s].clamp(totals[s]) : totals[s];
    efforts[s] = effort_response(params.models[s], t);
  }
  return efforts;
}

CPolytope polytope(const PairTable& a, const DerivedParameters& params) {
  const auto& st = params.structure;
  CPolytope out;
  out.floor = PairTable(st);
  out.surplus = equilibrium_efforts(a, params);
  out.total = out.surplus;
  std::vector<double> var(st.num_sources());
  for (std::size_t s = 0; s < var.size(); ++s) var[s] = variance_at(params.models[s], out.surplus[s]);
  for (const auto& [s, b] : st.pairs()) {
    double inner = 0.0;
    for (std::size_t i : st.members(b)) inner += params.xi.at(b, s, i) * var[i];
    const double q = a.at(s, b) * inner;
    out.floor.at(s, b) = q;
    out.total[s] += q;
  }
  out.dimension.resize(st.num_sources());
  for (std::size_t s = 0; s < st.num_sources(); ++s) out.dimension[s] = st.sharing(s).size() - 1;
  return out;
}

PairTable canonical_c(const PairTable& a, const DerivedParameters& params) {
  const CPolytope poly = polytope(a, params);
  const auto totals = total_incentives(a);
  PairTable c(params.structure);
  for (const auto& [s, b] : params.structure.pairs()) {
    const double share = totals[s] > 0.0 ? a.at(s, b) / totals[s]
                                         : 1.0 / static_cast<double>(params.structure.sharing(s).size());
    c.at(s, b) = poly.floor.at(s, b) + share * poly.surplus[s];
  }
  return c;
}

PolytopeMembership polytope_membership(const PairTable& c, const PairTable& a, const DerivedParameters& params,
                                       double tol) {
  if (c.values().size() != params.structure.num_pairs() || a.values().size() != params.structure.num_pairs()) {
    throw ShapeError("c and a must cover every sharing pair");
  }
  const CPolytope poly = polytope(a, params);
  PolytopeMembership out;
  out.dimension = poly.dimension;
  std::vector<double> sums(params.structure.num_sources(), 0.0);
  for (const auto& [s, b] : params.structure.pairs()) {
    sums[s] += c.at(s, b);
    if (c.at(s, b) < poly.floor.at(s, b) - tol) {
      out.violations.push_back("c" + pair_name(params, s, b) + " = " + number(c.at(s, b)) + " is below q = " +
                               number(poly.floor.at(s, b)));
    }
  }
  for (std::size_t s = 0; s < sums.size(); ++s) {
    if (std::abs(sums[s] - poly.total[s]) > tol) {
      out.violations.push_back("sum of c at " + params.source_ids[s] + " = " + number(sums[s]) +
                               " differs from q = " + number(poly.total[s]));
    }
  }
  out.member = out.violations.empty();
  return out;
}

PairTable expected_payments(const PairTable& c, const PairTable& a, const DerivedParameters& params) {
  const auto& st = params.structure;
  const auto efforts = equilibrium_efforts(a, params);
  PairTable out(st);
  for (const auto& [s, b] : st.pairs()) {
    double inner = 0.0;
    for (std::size_t i : st.members(b)) inner += params.xi.at(b, s, i) * variance_at(params.models[i], efforts[i]);
    out.at(s, b) = c.at(s, b) - a.at(s, b) * inner;
  }
  return out;
}

double reduced_loss(std::size_t aggregator, const PairTable& a, const DerivedParameters& params) {
  return reduced_loss_at(aggregator, a, params, equilibrium_efforts(a, params));
}

double best_response_target(const PairTable& a, const DerivedParameters& params, std::size_t s, std::size_t b,
                            bool* clamped) {
  const auto& st = params.structure;
  double r = params.gamma.at(s, b);
  double others = 0.0;
  for (std::size_t j : st.sharing(s)) {
    if (j == b) continue;
    others += a.at(s, j);
    for (std::size_t l : st.members(j)) {
      if (l == s || !st.shares(l, b)) continue;
      r += a.at(l, j) * params.xi.at(j, l, s);
    }
  }
  const double t = r + others;
  const auto& bnd = params.bounds[s];
  double target = r;
  bool clamp = false;
  if (t < bnd.a_lower) {
    target = bnd.a_lower - others;
    clamp = true;
  } else if (t > bnd.a_upper) {
    target = bnd.a_upper - others;
    clamp = true;
  }
  if (clamped) *clamped = clamp;
  return std::max(target, 0.0);
}

EquilibriumResult solve_unbounded(const DerivedParameters& params) {
  require_kind(params, false);
  EquilibriumResult result;
  const Eigen::MatrixXd& xi = params.xi_matrix.matrix;
  const auto rho = estimate_spectral_radius(xi);
  result.diagnostics.spectral_radius = rho.value;
  result.diagnostics.iterations = rho.iterations;
  result.diagnostics.marginal = std::abs(rho.value - 1.0) < kRhoMargin;
  if (rho.value >= 1.0 - kRhoMargin) {
    result.status = EquilibriumStatus::none;
    return result;
  }

  const auto n = xi.rows();
  const Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n) - xi;
  const Eigen::VectorXd gamma = to_vector(params.gamma);
  Eigen::VectorXd a = gamma;
  if (n > 0) {
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(system);
    const double rcond = lu.rcond();
    if (!(rcond > std::numeric_limits<double>::epsilon())) {
      throw NumericalFailureError("I - Xi is numerically singular", rcond > 0.0 ? 1.0 / rcond : kNaN);
    }
    a = lu.solve(gamma);
    if (!a.allFinite()) throw NumericalFailureError("Leontief solve produced non-finite values", 1.0 / rcond);
  }

  for (Eigen::Index k = 0; k < a.size(); ++k) {
    const double scale = std::max(1.0, std::abs(gamma(k)));
    if (a(k) < -1e-12 * scale) {
      const auto [s, b] = params.structure.pairs()[static_cast<std::size_t>(k)];
      throw NumericalFailureError("negative a" + pair_name(params, s, b) + " with rho < 1", kNaN);
    }
    a(k) = std::max(a(k), 0.0);
  }
  PairTable table = from_vector(params.structure, a);
  const auto totals = total_incentives(table);
  for (std::size_t s = 0; s < totals.size(); ++s) {
    if (!(params.gamma_total[s] >= params.bounds[s].a_lower * (1.0 - kIncentiveSlack))) {
      throw ValidationError("total demand of " + params.source_ids[s] + " is below a_lower");
    }
  }
  result.diagnostics.max_residual = fixed_point_residual(params, a);
  result.point = build_point(params, std::move(table));
  result.status = EquilibriumStatus::unique_a_infinite_c;
  return result;
}

EquilibriumResult solve_bounded(const DerivedParameters& params, const BoundedSolverOptions& options) {
  require_kind(params, true);
  if (!(options.damping > 0.0 && options.damping <= 1.0)) throw DomainError("damping must lie in (0, 1]");
  if (!(options.tol > 0.0)) throw DomainError("tolerance must be positive");
  if (options.max_iter == 0) throw DomainError("max_iter must be positive");

  const auto& st = params.structure;
  PairTable a = params.gamma;
  for (double& v : a.values()) v = std::max(v, 0.0);
  const double theta = options.damping;

  EquilibriumResult result;
  const bool has_xi = st.num_pairs() > 0;
  result.diagnostics.spectral_radius = has_xi ? spectral_radius(params.xi_matrix.matrix) : 0.0;
  double change = std::numeric_limits<double>::infinity();
  std::size_t it = 0;
  while (it < options.max_iter) {
    ++it;
    change = 0.0;
    for (std::size_t b = 0; b < st.num_aggregators(); ++b) {
      for (std::size_t s : st.members(b)) {
        const double target = best_response_target(a, params, s, b);
        double& cur = a.at(s, b);
        const double next = (1.0 - theta) * cur + theta * target;
        change = std::max(change, std::abs(next - cur));
        cur = next;
      }
    }
    if (change < options.tol) break;
  }
  result.diagnostics.iterations = it;
  if (!(change < options.tol)) {
    throw NonConvergenceError("bounded best-response iteration did not converge in " + std::to_string(it) +
                                  " iterations",
                              a.values(), change, it);
  }
  double residual = 0.0;
  for (const auto& [s, b] : st.pairs()) residual = std::max(residual, std::abs(a.at(s, b) - best_response_target(a, params, s, b)));
  result.diagnostics.max_residual = residual;
  result.point = build_point(params, std::move(a));
  result.status = EquilibriumStatus::converged_bounded;
  return result;
}

EquilibriumResult solve(const DerivedParameters& params, const BoundedSolverOptions& options) {
  if (params.all_unbounded()) return solve_unbounded(params);
  if (params.all_bounded()) return solve_bounded(params, options);
  throw ValidationError("mixed effort-set kinds");
}

DerivedParameters with_unbounded_efforts(const DerivedParameters& params) {
  DerivedParameters out = params;
  for (std::size_t s = 0; s < out.models.size(); ++s) {
    out.models[s] = out.models[s].with_effort_set(EffortSet::unbounded());
    out.bounds[s] = incentive_bounds(out.models[s]);
  }
  return out;
}

const CertificateCheck* Certificate::find(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

Certificate certify_equilibrium(const EquilibriumResult& result, const DerivedParameters& params,
                                const CertifyOptions& options) {
  Certificate cert;
  if (!result.point) {
    cert.checks.push_back({"solution_present", false, 0.0, "result carries no equilibrium"});
    return cert;
  }
  if (options.grid_points < 2 || !(options.grid_radius > 0.0)) throw DomainError("certification grid needs >= 2 points and a positive radius");
  const auto& st = params.structure;
  const EquilibriumPoint& pt = *result.point;
  const PairTable& a = pt.a;
  if (a.values().size() != st.num_pairs() || pt.canonical_c.values().size() != st.num_pairs()) {
    throw ShapeError("result does not match the sharing structure");
  }
  const bool bounded = params.all_bounded();

  {
    CertificateCheck chk{"nonnegativity", true, 0.0, ""};
    for (const auto& [s, b] : st.pairs()) {
      if (a.at(s, b) < 0.0) {
        chk.passed = false;
        chk.worst = std::min(chk.worst, a.at(s, b));
        chk.detail = "a" + pair_name(params, s, b) + " is negative";
      }
    }
    cert.checks.push_back(chk);
  }

  {
    CertificateCheck chk{"incentive_range", true, 0.0, ""};
    const auto totals = total_incentives(a);
    for (std::size_t s = 0; s < totals.size(); ++s) {
      if (!params.bounds[s].contains(totals[s])) {
        chk.passed = false;
        chk.detail = "total incentive of " + params.source_ids[s] + " = " + number(totals[s]) + " is outside its range";
      }
    }
    cert.checks.push_back(chk);
  }
  const bool range_ok = cert.checks.back().passed;

  {
    CertificateCheck chk{"stationarity", true, 0.0, ""};
    for (const auto& [s, b] : st.pairs()) {
      bool clamped = false;
      double target;
      if (bounded) {
        target = best_response_target(a, params, s, b, &clamped);
      } else {
        target = params.gamma.at(s, b);
        for (std::size_t j : st.sharing(s)) {
          if (j == b) continue;
          for (std::size_t l : st.members(j)) {
            if (l != s && st.shares(l, b)) target += a.at(l, j) * params.xi.at(j, l, s);
          }
        }
      }
      if (clamped) ++cert.clamped_pairs;
      const double r = std::abs(a.at(s, b) - target);
      if (r > chk.worst) {
        chk.worst = r;
        if (r >= options.stationarity_tol) chk.detail = "residual " + number(r) + " at " + pair_name(params, s, b);
      }
    }
    chk.passed = chk.worst < options.stationarity_tol;
    cert.checks.push_back(chk);
  }

  if (range_ok) {
    CertificateCheck chk{"best_response_grid", true, 0.0, ""};
    const double step = 2.0 * options.grid_radius / static_cast<double>(options.grid_points - 1);
    for (std::size_t b = 0; b < st.num_aggregators() && chk.passed; ++b) {
      const double base = reduced_loss(b, a, params);
      for (std::size_t s : st.members(b)) {
        for (std::size_t k = 0; k < options.grid_points; ++k) {
          const double delta = -options.grid_radius + step * static_cast<double>(k);
          if (delta == 0.0) continue;
          PairTable trial = a;
          trial.at(s, b) += delta;
          if (!feasible(trial, params)) continue;
          const double gain = base - reduced_loss(b, trial, params);
          if (gain > chk.worst) chk.worst = gain;
          if (gain > options.improvement_tol) {
            chk.passed = false;
            chk.detail = "moving a" + pair_name(params, s, b) + " by " + number(delta) + " lowers the cost of " +
                         params.aggregator_ids[b] + " by " + number(gain);
            break;
          }
        }
        if (!chk.passed) break;
      }
    }
    cert.checks.push_back(chk);
  } else {
    cert.checks.push_back({"best_response_grid", false, 0.0, "skipped: incentives outside their range"});
  }

  if (range_ok) {
    const auto payments = expected_payments(pt.canonical_c, a, params);
    const auto efforts = equilibrium_efforts(a, params);
    CertificateCheck binding{"ir_binding", true, 0.0, ""};
    CertificateCheck nonneg{"payment_nonnegativity", true, 0.0, ""};
    std::vector<double> sums(st.num_sources(), 0.0);
    for (const auto& [s, b] : st.pairs()) {
      sums[s] += payments.at(s, b);
      if (payments.at(s, b) < -options.binding_tol) {
        nonneg.passed = false;
        nonneg.worst = std::min(nonneg.worst, payments.at(s, b));
        nonneg.detail = "expected payment " + pair_name(params, s, b) + " is negative";
      }
    }
    for (std::size_t s = 0; s < sums.size(); ++s) {
      const double gap = std::abs(sums[s] - efforts[s]);
      if (gap > binding.worst) binding.worst = gap;
      if (gap > options.binding_tol) {
        binding.passed = false;
        binding.detail = "payments to " + params.source_ids[s] + " exceed effort by " + number(sums[s] - efforts[s]);
      }
    }
    cert.checks.push_back(binding);
    cert.checks.push_back(nonneg);
  }

  cert.certified = std::all_of(cert.checks.begin(), cert.checks.end(), [](const auto& c) { return c.passed; });
  return cert;
}

std::vector<AlphaSweepRow> alpha_sweep(const DerivedParameters& params, const std::vector<double>& alphas) {
  require_kind(params, false);
  std::vector<AlphaSweepRow> rows;
  rows.reserve(alphas.size());
  for (double alpha : alphas) {
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw DomainError("alpha must be a finite nonnegative number");
    DerivedParameters scaled = params;
    scaled.xi_matrix.matrix *= alpha;
    const EquilibriumResult r = solve_unbounded(scaled);
    AlphaSweepRow row;
    row.alpha = alpha;
    row.rho = r.diagnostics.spectral_radius;
    row.status = r.status;
    row.max_a_total = kNaN;
    if (r.point) row.max_a_total = *std::max_element(r.point->a_total.begin(), r.point->a_total.end());
    rows.push_back(row);
  }
  return rows;
}

}  // namespace datamarket
