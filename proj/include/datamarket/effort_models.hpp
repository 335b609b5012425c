#pragma once

#include <functional>
#include <limits>
#include <string>
#include <variant>

namespace datamarket {

/// Effort a source may exert: [0, inf) or [0, e_max].
struct EffortSet {
  enum class Kind { unbounded, bounded };

  Kind kind = Kind::unbounded;
  double e_max = std::numeric_limits<double>::infinity();

  static EffortSet unbounded() { return {}; }
  static EffortSet bounded(double e_max);

  bool is_bounded() const noexcept { return kind == Kind::bounded; }
  bool contains(double effort) const noexcept;
};

/// sigma(e) = sigma0 * exp(-lambda * e)
struct ExponentialFamily {
  double sigma0 = 1.0;
  double lambda = 1.0;
};

/// sigma(e) = sigma0 * (1 + e)^(-k)
struct InversePowerFamily {
  double sigma0 = 1.0;
  double k = 1.0;
};

/// User-supplied standard deviation curve with its first two derivatives.
/// Checked numerically for positivity, monotonicity and convexity when the
/// model is constructed; effort responses go through the bracketed root-finder.
struct CustomFamily {
  std::string name;
  std::function<double(double)> sigma;
  std::function<double(double)> d_sigma;
  std::function<double(double)> d2_sigma;
};

using VarianceFamily = std::variant<ExponentialFamily, InversePowerFamily, CustomFamily>;

/// Maps a source's effort to the standard deviation of its reported sample.
/// Immutable after construction.
class EffortVarianceModel {
 public:
  EffortVarianceModel(VarianceFamily family, EffortSet effort_set);

  static EffortVarianceModel exponential(double sigma0, double lambda,
                                         EffortSet effort_set = EffortSet::unbounded());
  static EffortVarianceModel inverse_power(double sigma0, double k,
                                           EffortSet effort_set = EffortSet::unbounded());

  const VarianceFamily& family() const noexcept { return family_; }
  const EffortSet& effort_set() const noexcept { return effort_set_; }
  std::string family_name() const;

  /// Same curve, different effort set.
  EffortVarianceModel with_effort_set(EffortSet effort_set) const;

  double sigma(double effort) const;
  double d_sigma(double effort) const;
  double d2_sigma(double effort) const;

  /// True when effort_response has an analytic inverse of the first-order condition.
  bool has_closed_form() const noexcept;

 private:
  void validate() const;

  VarianceFamily family_;
  EffortSet effort_set_;
};

/// Range of total incentive 𝐚_s over which the effort map is meaningful.
struct IncentiveBounds {
  double a_lower = 0.0;
  double a_upper = std::numeric_limits<double>::infinity();

  bool is_bounded() const noexcept { return a_upper < std::numeric_limits<double>::infinity(); }
  bool contains(double a_total) const noexcept;
  double clamp(double a_total) const noexcept;
};

/// Relative slack applied when checking a_total against [a_lower, a_upper],
/// so values produced by a linear solve that sit on a bound are accepted.
inline constexpr double kIncentiveSlack = 1e-12;

IncentiveBounds incentive_bounds(const EffortVarianceModel& model);

/// Dominant-strategy effort mu(a_total): the root of
/// 2 a sigma(e) sigma'(e) + 1 = 0 on the effort set.
double effort_response(const EffortVarianceModel& model, double a_total);

/// d mu / d a_total by implicit differentiation of the first-order condition.
double effort_response_derivative(const EffortVarianceModel& model, double a_total);

/// sigma(effort)^2.
double variance_at(const EffortVarianceModel& model, double effort);

/// Bisection-safeguarded Newton on the first-order condition. Used for custom
/// families; exposed so the closed forms can be cross-checked.
double solve_effort_foc(const EffortVarianceModel& model, double a_total);

}  // namespace datamarket
