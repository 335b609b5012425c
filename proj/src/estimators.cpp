#include "datamarket/estimators.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "datamarket/errors.hpp"
#include "datamarket/rng.hpp"

namespace datamarket {

namespace {

Eigen::VectorXd augmented(const FeaturePoint& x) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(x.size()) + 1);
  for (std::size_t i = 0; i < x.size(); ++i) out(static_cast<Eigen::Index>(i)) = x[i];
  out(static_cast<Eigen::Index>(x.size())) = 1.0;
  return out;
}

std::size_t common_dimension(std::span<const FeaturePoint> points) {
  if (points.empty()) throw IllDefinedEstimatorError("empty dataset");
  const std::size_t d = points.front().size();
  if (d == 0) throw ShapeError("feature points must have dimension >= 1");
  for (const auto& p : points) {
    if (p.size() != d) throw ShapeError("feature points have inconsistent dimensions");
  }
  return d;
}

void check_query_dimension(const QueryDistribution& q, std::size_t d) {
  for (const auto& atom : q.atoms) {
    if (atom.point.size() != d) {
      throw ShapeError("query atom dimension " + std::to_string(atom.point.size()) +
                       " does not match feature dimension " + std::to_string(d));
    }
  }
}

}  // namespace

QueryDistribution QueryDistribution::point_mass(FeaturePoint at) {
  return QueryDistribution{{QueryAtom{std::move(at), 1.0}}};
}

QueryDistribution QueryDistribution::uniform(std::span<const FeaturePoint> points) {
  QueryDistribution out;
  for (const auto& p : points) out.atoms.push_back({p, 1.0 / static_cast<double>(points.size())});
  return out;
}

QueryDistribution QueryDistribution::mixture(const QueryDistribution& first,
                                             const QueryDistribution& second, double alpha) {
  QueryDistribution out;
  for (const auto& a : first.atoms) out.atoms.push_back({a.point, alpha * a.probability});
  for (const auto& a : second.atoms) out.atoms.push_back({a.point, (1.0 - alpha) * a.probability});
  return out;
}

void QueryDistribution::validate() const {
  if (atoms.empty()) throw DomainError("query distribution has no atoms");
  double total = 0.0;
  for (const auto& a : atoms) {
    if (!(a.probability >= 0.0) || !std::isfinite(a.probability)) {
      throw DomainError("query distribution has a negative or non-finite probability");
    }
    total += a.probability;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw DomainError("query distribution probabilities sum to " + std::to_string(total) +
                      ", expected 1");
  }
}

double LinearFunction::operator()(const FeaturePoint& x) const {
  if (x.size() != coefficients.size()) throw ShapeError("ground truth dimension mismatch");
  return std::inner_product(x.begin(), x.end(), coefficients.begin(), intercept);
}

OlsDesign::OlsDesign(std::span<const FeaturePoint> points) {
  const std::size_t d = common_dimension(points);
  const auto n = static_cast<Eigen::Index>(points.size());
  const auto p = static_cast<Eigen::Index>(d) + 1;
  design_.resize(n, p);
  for (Eigen::Index i = 0; i < n; ++i) design_.row(i) = augmented(points[static_cast<std::size_t>(i)]).transpose();
  if (n < p) {
    throw IllDefinedEstimatorError("OLS with intercept needs at least " + std::to_string(p) +
                                   " points, got " + std::to_string(n));
  }
  const Eigen::MatrixXd gram = design_.transpose() * design_;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  condition_ = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  if (!(lo > 0.0) || condition_ >= kMaxGramCondition) {
    throw IllDefinedEstimatorError("X^T X is rank deficient (condition number " +
                                   std::to_string(condition_) + ")");
  }
  gram_.compute(gram);
}

Eigen::VectorXd OlsDesign::prediction_weights(const FeaturePoint& at) const {
  if (at.size() != dimension()) throw ShapeError("query point dimension mismatch");
  return design_ * gram_.solve(augmented(at));
}

Eigen::VectorXd OlsDesign::fit(std::span<const double> responses) const {
  if (responses.size() != size()) throw ShapeError("response count does not match design size");
  const Eigen::Map<const Eigen::VectorXd> y(responses.data(), static_cast<Eigen::Index>(responses.size()));
  return gram_.solve(design_.transpose() * y);
}

double OlsDesign::predict(std::span<const double> responses, const FeaturePoint& at) const {
  if (at.size() != dimension()) throw ShapeError("query point dimension mismatch");
  return fit(responses).dot(augmented(at));
}

std::vector<double> ols_coefficients(std::span<const FeaturePoint> points,
                                     const QueryDistribution& query_dist) {
  const OlsDesign design(points);
  check_query_dimension(query_dist, design.dimension());
  std::vector<double> h(points.size(), 0.0);
  for (const auto& atom : query_dist.atoms) {
    const Eigen::VectorXd w = design.prediction_weights(atom.point);
    for (std::size_t i = 0; i < h.size(); ++i) {
      const double wi = w(static_cast<Eigen::Index>(i));
      h[i] += atom.probability * wi * wi;
    }
  }
  return h;
}

std::vector<double> separability_coefficients(const EstimatorSpec& estimator,
                                              std::span<const FeaturePoint> points,
                                              const QueryDistribution& query_dist) {
  switch (estimator.kind) {
    case EstimatorKind::ols_with_intercept:
      return ols_coefficients(points, query_dist);
  }
  throw DomainError("unknown estimator kind");
}

double g_value(std::span<const FeaturePoint> points, const QueryDistribution& query_dist,
               std::span<const double> variances) {
  if (variances.size() != points.size()) {
    throw ShapeError("got " + std::to_string(variances.size()) + " variances for " +
                     std::to_string(points.size()) + " points");
  }
  const auto h = ols_coefficients(points, query_dist);
  return std::inner_product(h.begin(), h.end(), variances.begin(), 0.0);
}

double loo_prediction(std::span<const FeaturePoint> points, std::span<const double> responses,
                      std::size_t exclude, const FeaturePoint& at) {
  if (responses.size() != points.size()) throw ShapeError("response count does not match point count");
  if (exclude >= points.size()) throw ShapeError("excluded index out of range");
  std::vector<FeaturePoint> rest_points;
  std::vector<double> rest_responses;
  rest_points.reserve(points.size() - 1);
  rest_responses.reserve(points.size() - 1);
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (i == exclude) continue;
    rest_points.push_back(points[i]);
    rest_responses.push_back(responses[i]);
  }
  try {
    const OlsDesign design(rest_points);
    return design.predict(rest_responses, at);
  } catch (const IllDefinedEstimatorError& e) {
    throw IllDefinedPaymentError("leave-one-out design without point " + std::to_string(exclude) +
                                 " is ill-defined: " + e.what());
  }
}

SeparabilityReport validate_separability(std::span<const FeaturePoint> points,
                                         const QueryDistribution& query_dist,
                                         std::span<const double> variances,
                                         const LinearFunction& ground_truth, std::size_t trials,
                                         std::uint64_t seed) {
  if (trials < 1000) throw DomainError("separability validation needs at least 1000 trials");
  if (variances.size() != points.size()) throw ShapeError("variance count does not match point count");
  for (double v : variances) {
    if (!(v >= 0.0)) throw DomainError("variances must be nonnegative");
  }
  query_dist.validate();

  SeparabilityReport report;
  report.trials = trials;
  report.predicted_mse = g_value(points, query_dist, variances);

  // The Monte-Carlo side fits through a pivoted QR of X rather than the
  // normal equations used for h, so the two sides share no factorization.
  const std::size_t n = points.size();
  const std::size_t d = common_dimension(points);
  Eigen::MatrixXd design(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d) + 1);
  for (std::size_t i = 0; i < n; ++i) design.row(static_cast<Eigen::Index>(i)) = augmented(points[i]).transpose();
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);

  std::vector<Eigen::VectorXd> atom_rows;
  std::vector<double> atom_truth;
  for (const auto& atom : query_dist.atoms) {
    atom_rows.push_back(augmented(atom.point));
    atom_truth.push_back(ground_truth(atom.point));
  }
  Eigen::VectorXd clean(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) clean(static_cast<Eigen::Index>(i)) = ground_truth(points[i]);
  std::vector<double> stddev(n);
  for (std::size_t i = 0; i < n; ++i) stddev[i] = std::sqrt(variances[i]);

  double mean = 0.0, m2 = 0.0;
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  for (std::size_t t = 0; t < trials; ++t) {
    Rng rng(derive_subseed(seed, t));
    for (std::size_t i = 0; i < n; ++i) {
      y(static_cast<Eigen::Index>(i)) = clean(static_cast<Eigen::Index>(i)) + stddev[i] * rng.normal();
    }
    const Eigen::VectorXd theta = qr.solve(y);
    double err = 0.0;
    for (std::size_t a = 0; a < atom_rows.size(); ++a) {
      const double diff = theta.dot(atom_rows[a]) - atom_truth[a];
      err += query_dist.atoms[a].probability * diff * diff;
    }
    // Welford update.
    const double delta = err - mean;
    mean += delta / static_cast<double>(t + 1);
    m2 += delta * (err - mean);
  }
  report.mc_mse = mean;
  const double var = trials > 1 ? m2 / static_cast<double>(trials - 1) : 0.0;
  report.standard_error = std::sqrt(var / static_cast<double>(trials));
  return report;
}

}  // namespace datamarket
