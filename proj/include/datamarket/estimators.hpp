#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace datamarket {

/// Feature vector x_s of a source. All points in one dataset share a dimension.
using FeaturePoint = std::vector<double>;

struct QueryAtom {
  FeaturePoint point;
  double probability = 0.0;
};

/// Discrete weighting distribution F_b over query points.
struct QueryDistribution {
  std::vector<QueryAtom> atoms;

  static QueryDistribution point_mass(FeaturePoint at);
  /// Equal weight on every point.
  static QueryDistribution uniform(std::span<const FeaturePoint> points);
  /// alpha * first + (1 - alpha) * second, atoms concatenated.
  static QueryDistribution mixture(const QueryDistribution& first, const QueryDistribution& second,
                                   double alpha);

  /// Throws DomainError unless probabilities are nonnegative and sum to 1 within 1e-12.
  void validate() const;
};

enum class EstimatorKind { ols_with_intercept };

struct EstimatorSpec {
  EstimatorKind kind = EstimatorKind::ols_with_intercept;
};

/// f(x) = coefficients . x + intercept
struct LinearFunction {
  std::vector<double> coefficients;
  double intercept = 0.0;

  double operator()(const FeaturePoint& x) const;
};

/// Largest admissible condition number of X^T X before a design is declared rank deficient.
inline constexpr double kMaxGramCondition = 1e12;

/// Ordinary least squares with intercept on a fixed design. Construction
/// factorizes X^T X once and rejects rank-deficient or ill-conditioned designs
/// with IllDefinedEstimatorError.
class OlsDesign {
 public:
  explicit OlsDesign(std::span<const FeaturePoint> points);

  std::size_t size() const noexcept { return static_cast<std::size_t>(design_.rows()); }
  std::size_t dimension() const noexcept { return static_cast<std::size_t>(design_.cols()) - 1; }

  /// w = X (X^T X)^{-1} [x; 1]: the prediction at x is w . y.
  Eigen::VectorXd prediction_weights(const FeaturePoint& at) const;
  /// Fitted [coefficients; intercept].
  Eigen::VectorXd fit(std::span<const double> responses) const;
  double predict(std::span<const double> responses, const FeaturePoint& at) const;
  double condition_number() const noexcept { return condition_; }

 private:
  Eigen::MatrixXd design_;
  Eigen::LLT<Eigen::MatrixXd> gram_;
  double condition_ = 0.0;
};

/// Separability coefficients h_i such that the expected squared error of the
/// fitted function under `query_dist` equals sum_i h_i sigma_i^2.
std::vector<double> ols_coefficients(std::span<const FeaturePoint> points,
                                     const QueryDistribution& query_dist);

/// Dispatch on estimator kind; the seam for additional separable estimators.
std::vector<double> separability_coefficients(const EstimatorSpec& estimator,
                                              std::span<const FeaturePoint> points,
                                              const QueryDistribution& query_dist);

/// g = sum_i h_i variances_i.
double g_value(std::span<const FeaturePoint> points, const QueryDistribution& query_dist,
               std::span<const double> variances);

/// OLS fit on every point except `exclude`, evaluated at `at`. A rank-deficient
/// leave-one-out design raises IllDefinedPaymentError.
double loo_prediction(std::span<const FeaturePoint> points, std::span<const double> responses,
                      std::size_t exclude, const FeaturePoint& at);

struct SeparabilityReport {
  double mc_mse = 0.0;
  double predicted_mse = 0.0;
  double standard_error = 0.0;
  std::size_t trials = 0;
};

/// Monte-Carlo check of the separability identity with Gaussian noise.
/// Trial t draws its noise from Rng(derive_subseed(seed, t)).
SeparabilityReport validate_separability(std::span<const FeaturePoint> points,
                                         const QueryDistribution& query_dist,
                                         std::span<const double> variances,
                                         const LinearFunction& ground_truth, std::size_t trials,
                                         std::uint64_t seed);

}  // namespace datamarket
