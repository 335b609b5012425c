#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "datamarket/market.hpp"

namespace datamarket {

enum class EquilibriumStatus { unique_a_infinite_c, none, converged_bounded };

std::string to_string(EquilibriumStatus status);
EquilibriumStatus parse_status(const std::string& text);

/// Existence threshold: the unbounded game has an equilibrium when rho(Xi) < 1 - kRhoMargin.
inline constexpr double kRhoMargin = 1e-9;

struct SpectralRadiusEstimate {
  double value = 0.0;
  std::size_t iterations = 0;
  /// "power", "shifted_power" or "zero".
  std::string method;
};

/// Spectral radius of a nonnegative square matrix by power iteration with a
/// Collatz-Wielandt bracket. When the plain iteration stalls (periodic or
/// reducible matrices) it splits the matrix into strongly connected blocks,
/// iterates each shifted block and checks the result against the row/column-sum
/// bracket.
SpectralRadiusEstimate estimate_spectral_radius(const Eigen::MatrixXd& matrix, double tol = 1e-10,
                                                std::size_t max_iter = 100000);
double spectral_radius(const Eigen::MatrixXd& matrix);

/// Per-source c-polytope {c_s : sum_b c_s^b = total_s, c_s^b >= floor_s^b}.
struct CPolytope {
  PairTable floor;             // q_s^b(a)
  std::vector<double> total;   // q_s(a)
  std::vector<double> surplus; // mu_s(a_total_s)
  std::vector<std::size_t> dimension;  // |B_s| - 1
};

struct EquilibriumPoint {
  PairTable a;
  std::vector<double> a_total;
  PairTable canonical_c;
  CPolytope polytope;
  std::vector<double> efforts;
};

struct SolverDiagnostics {
  double spectral_radius = 0.0;
  std::size_t iterations = 0;
  double max_residual = 0.0;
  /// |rho - 1| < kRhoMargin.
  bool marginal = false;
};

struct EquilibriumResult {
  EquilibriumStatus status = EquilibriumStatus::none;
  std::optional<EquilibriumPoint> point;
  SolverDiagnostics diagnostics;
};

struct BoundedSolverOptions {
  double damping = 0.5;
  std::size_t max_iter = 100000;
  double tol = 1e-10;
};

/// Leontief solve (I - Xi) a = gamma. All effort sets must be unbounded.
EquilibriumResult solve_unbounded(const DerivedParameters& params);

/// Sequential damped best responses, aggregators in id order, starting from a = gamma.
/// All effort sets must be bounded.
EquilibriumResult solve_bounded(const DerivedParameters& params, const BoundedSolverOptions& options = {});

/// Dispatch on the effort-set kind shared by all sources.
EquilibriumResult solve(const DerivedParameters& params, const BoundedSolverOptions& options = {});

/// Same parameters with every effort set replaced by [0, inf).
DerivedParameters with_unbounded_efforts(const DerivedParameters& params);

/// a flattened in pair order, and back.
Eigen::VectorXd to_vector(const PairTable& table);
PairTable from_vector(const MarketStructure& structure, const Eigen::VectorXd& values);

/// a_total_s = sum_b a_s^b.
std::vector<double> total_incentives(const PairTable& a);

/// mu_s(a_total_s) per source; bounded sources use the total clamped into [a_lower, a_upper].
std::vector<double> equilibrium_efforts(const PairTable& a, const DerivedParameters& params);

CPolytope polytope(const PairTable& a, const DerivedParameters& params);

/// Proportional-surplus selection c_s^b = q_s^b + (a_s^b / a_total_s) mu_s.
PairTable canonical_c(const PairTable& a, const DerivedParameters& params);

struct PolytopeMembership {
  bool member = true;
  std::vector<std::string> violations;
  std::vector<std::size_t> dimension;
};

PolytopeMembership polytope_membership(const PairTable& c, const PairTable& a, const DerivedParameters& params,
                                       double tol = 1e-9);

/// Expected payment c_s^b - a_s^b sum_i xi^b_{s,i} sigma_i^2(e_i) at the efforts induced by a.
PairTable expected_payments(const PairTable& c, const PairTable& a, const DerivedParameters& params);

/// Aggregator b's cost after substituting the binding IR constraint, up to
/// terms that do not depend on a^b.
double reduced_loss(std::size_t aggregator, const PairTable& a, const DerivedParameters& params);

/// Best-response target of (s, b) against the rest of `a`, before damping.
/// `clamped` is set when the lower or upper branch applies.
double best_response_target(const PairTable& a, const DerivedParameters& params, std::size_t source,
                            std::size_t aggregator, bool* clamped = nullptr);

struct CertifyOptions {
  double grid_radius = 0.5;
  std::size_t grid_points = 11;
  double stationarity_tol = 1e-8;
  double improvement_tol = 1e-9;
  double binding_tol = 1e-9;
};

struct CertificateCheck {
  std::string name;
  bool passed = true;
  double worst = 0.0;
  std::string detail;
};

struct Certificate {
  bool certified = false;
  std::vector<CertificateCheck> checks;
  /// Pairs where a clamp branch was active; interior stationarity is not required there.
  std::size_t clamped_pairs = 0;

  const CertificateCheck* find(const std::string& name) const;
};

Certificate certify_equilibrium(const EquilibriumResult& result, const DerivedParameters& params,
                                const CertifyOptions& options = {});

struct AlphaSweepRow {
  double alpha = 0.0;
  double rho = 0.0;
  EquilibriumStatus status = EquilibriumStatus::none;
  /// NaN when status is none.
  double max_a_total = 0.0;
};

/// Solve with Xi scaled by each alpha. Effort sets must be unbounded.
std::vector<AlphaSweepRow> alpha_sweep(const DerivedParameters& params, const std::vector<double>& alphas);

}  // namespace datamarket
