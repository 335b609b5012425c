#include "datamarket/effort_models.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "datamarket/errors.hpp"

namespace datamarket {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string describe(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

// Total incentive at which `effort` solves the first-order condition.
double incentive_for_effort(const EffortVarianceModel& model, double effort) {
  return -1.0 / (2.0 * model.sigma(effort) * model.d_sigma(effort));
}

void check_incentive(const EffortVarianceModel& model, double a_total) {
  if (!(a_total > 0.0) || !std::isfinite(a_total)) {
    throw DomainError("total incentive must be positive and finite, got " + describe(a_total));
  }
  const IncentiveBounds bounds = incentive_bounds(model);
  if (a_total < bounds.a_lower * (1.0 - kIncentiveSlack)) {
    throw OutOfRangeError("total incentive " + describe(a_total) + " is below a_lower = " +
                          describe(bounds.a_lower));
  }
  if (a_total > bounds.a_upper * (1.0 + kIncentiveSlack)) {
    throw OutOfRangeError("total incentive " + describe(a_total) + " is above a_upper = " +
                          describe(bounds.a_upper));
  }
}

double clamp_to_effort_set(const EffortSet& set, double effort) {
  effort = std::max(effort, 0.0);
  if (set.is_bounded()) effort = std::min(effort, set.e_max);
  return effort;
}

}  // namespace

EffortSet EffortSet::bounded(double e_max) {
  if (!(e_max > 0.0) || !std::isfinite(e_max)) {
    throw DomainError("bounded effort set needs a positive finite e_max, got " + describe(e_max));
  }
  return EffortSet{Kind::bounded, e_max};
}

bool EffortSet::contains(double effort) const noexcept {
  if (!(effort >= 0.0)) return false;
  return is_bounded() ? effort <= e_max : std::isfinite(effort);
}

bool IncentiveBounds::contains(double a_total) const noexcept {
  return a_total >= a_lower * (1.0 - kIncentiveSlack) &&
         a_total <= a_upper * (1.0 + kIncentiveSlack);
}

double IncentiveBounds::clamp(double a_total) const noexcept {
  return std::clamp(a_total, a_lower, a_upper);
}

EffortVarianceModel::EffortVarianceModel(VarianceFamily family, EffortSet effort_set)
    : family_(std::move(family)), effort_set_(effort_set) {
  validate();
}

EffortVarianceModel EffortVarianceModel::exponential(double sigma0, double lambda,
                                                     EffortSet effort_set) {
  return EffortVarianceModel(ExponentialFamily{sigma0, lambda}, effort_set);
}

EffortVarianceModel EffortVarianceModel::inverse_power(double sigma0, double k,
                                                       EffortSet effort_set) {
  return EffortVarianceModel(InversePowerFamily{sigma0, k}, effort_set);
}

EffortVarianceModel EffortVarianceModel::with_effort_set(EffortSet effort_set) const {
  return EffortVarianceModel(family_, effort_set);
}

std::string EffortVarianceModel::family_name() const {
  return std::visit(overloaded{[](const ExponentialFamily&) { return std::string("exponential"); },
                               [](const InversePowerFamily&) { return std::string("inverse_power"); },
                               [](const CustomFamily& c) { return c.name; }},
                    family_);
}

bool EffortVarianceModel::has_closed_form() const noexcept {
  return !std::holds_alternative<CustomFamily>(family_);
}

void EffortVarianceModel::validate() const {
  if (effort_set_.is_bounded() && (!(effort_set_.e_max > 0.0) || !std::isfinite(effort_set_.e_max))) {
    throw DomainError("bounded effort set needs a positive finite e_max");
  }
  std::visit(
      overloaded{
          [](const ExponentialFamily& f) {
            if (!(f.sigma0 > 0.0) || !(f.lambda > 0.0) || !std::isfinite(f.sigma0) ||
                !std::isfinite(f.lambda)) {
              throw DomainError("exponential family needs sigma0 > 0 and lambda > 0");
            }
          },
          [](const InversePowerFamily& f) {
            if (!(f.sigma0 > 0.0) || !(f.k > 0.0) || !std::isfinite(f.sigma0) ||
                !std::isfinite(f.k)) {
              throw DomainError("inverse_power family needs sigma0 > 0 and k > 0");
            }
          },
          [this](const CustomFamily& f) {
            if (!f.sigma || !f.d_sigma || !f.d2_sigma) {
              throw DomainError("custom family '" + f.name + "' must provide sigma, sigma' and sigma''");
            }
            // Sample the curve and reject anything that is not positive,
            // strictly decreasing and convex with consistent derivatives.
            const double hi = effort_set_.is_bounded() ? effort_set_.e_max : 20.0;
            constexpr int kSamples = 64;
            for (int i = 0; i <= kSamples; ++i) {
              const double e = hi * i / kSamples;
              const double s = f.sigma(e), ds = f.d_sigma(e), d2s = f.d2_sigma(e);
              if (!(s > 0.0) || !(ds < 0.0) || !(d2s >= 0.0)) {
                throw DomainError("custom family '" + f.name +
                                  "' is not positive, strictly decreasing and convex at effort " +
                                  describe(e));
              }
              const double h = 1e-5 * std::max(1.0, e);
              const double lo_e = std::max(0.0, e - h);
              const double fd = (f.sigma(e + h) - f.sigma(lo_e)) / (e + h - lo_e);
              if (std::abs(fd - ds) > 1e-3 * std::max(std::abs(ds), 1e-8)) {
                throw DomainError("custom family '" + f.name +
                                  "' derivative disagrees with finite differences at effort " +
                                  describe(e));
              }
            }
          }},
      family_);
}

double EffortVarianceModel::sigma(double e) const {
  return std::visit(overloaded{[e](const ExponentialFamily& f) { return f.sigma0 * std::exp(-f.lambda * e); },
                               [e](const InversePowerFamily& f) { return f.sigma0 * std::pow(1.0 + e, -f.k); },
                               [e](const CustomFamily& f) { return f.sigma(e); }},
                    family_);
}

double EffortVarianceModel::d_sigma(double e) const {
  return std::visit(
      overloaded{[e](const ExponentialFamily& f) { return -f.lambda * f.sigma0 * std::exp(-f.lambda * e); },
                 [e](const InversePowerFamily& f) { return -f.k * f.sigma0 * std::pow(1.0 + e, -f.k - 1.0); },
                 [e](const CustomFamily& f) { return f.d_sigma(e); }},
      family_);
}

double EffortVarianceModel::d2_sigma(double e) const {
  return std::visit(
      overloaded{[e](const ExponentialFamily& f) {
                   return f.lambda * f.lambda * f.sigma0 * std::exp(-f.lambda * e);
                 },
                 [e](const InversePowerFamily& f) {
                   return f.k * (f.k + 1.0) * f.sigma0 * std::pow(1.0 + e, -f.k - 2.0);
                 },
                 [e](const CustomFamily& f) { return f.d2_sigma(e); }},
      family_);
}

IncentiveBounds incentive_bounds(const EffortVarianceModel& model) {
  IncentiveBounds out;
  out.a_lower = incentive_for_effort(model, 0.0);
  if (model.effort_set().is_bounded()) {
    out.a_upper = incentive_for_effort(model, model.effort_set().e_max);
  }
  return out;
}

double solve_effort_foc(const EffortVarianceModel& model, double a_total) {
  check_incentive(model, a_total);
  // phi is strictly increasing in e because (sigma sigma')' = sigma'^2 + sigma sigma'' > 0.
  auto phi = [&](double e) { return 2.0 * a_total * model.sigma(e) * model.d_sigma(e) + 1.0; };
  auto dphi = [&](double e) {
    const double ds = model.d_sigma(e);
    return 2.0 * a_total * (ds * ds + model.sigma(e) * model.d2_sigma(e));
  };

  double lo = 0.0;
  if (phi(lo) >= 0.0) return 0.0;
  double hi;
  if (model.effort_set().is_bounded()) {
    hi = model.effort_set().e_max;
    if (phi(hi) <= 0.0) return hi;
  } else {
    hi = 1.0;
    int expansions = 0;
    while (phi(hi) <= 0.0) {
      lo = hi;
      hi *= 2.0;
      if (++expansions > 1100) throw DomainError("could not bracket the effort first-order condition");
    }
  }

  double e = 0.5 * (lo + hi);
  for (int iter = 0; iter < 500; ++iter) {
    const double value = phi(e);
    if (value == 0.0) return e;
    if (value < 0.0) lo = e; else hi = e;
    const double slope = dphi(e);
    double next = e - value / slope;
    if (!(next > lo && next < hi) || !std::isfinite(next)) next = 0.5 * (lo + hi);
    const double step = std::abs(next - e);
    e = next;
    if (step <= 1e-12 * std::max(1.0, std::abs(e)) || (hi - lo) <= 1e-12 * std::max(1.0, std::abs(e))) {
      return e;
    }
  }
  return e;
}

double effort_response(const EffortVarianceModel& model, double a_total) {
  check_incentive(model, a_total);
  const EffortSet& set = model.effort_set();
  return std::visit(
      overloaded{[&](const ExponentialFamily& f) {
                   const double e = std::log(2.0 * a_total * f.lambda * f.sigma0 * f.sigma0) / (2.0 * f.lambda);
                   return clamp_to_effort_set(set, e);
                 },
                 [&](const InversePowerFamily& f) {
                   const double base = 2.0 * a_total * f.k * f.sigma0 * f.sigma0;
                   const double e = std::pow(base, 1.0 / (2.0 * f.k + 1.0)) - 1.0;
                   return clamp_to_effort_set(set, e);
                 },
                 [&](const CustomFamily&) { return solve_effort_foc(model, a_total); }},
      model.family());
}

double effort_response_derivative(const EffortVarianceModel& model, double a_total) {
  const double mu = effort_response(model, a_total);
  const double s = model.sigma(mu), ds = model.d_sigma(mu), d2s = model.d2_sigma(mu);
  return 1.0 / (2.0 * a_total * a_total * (ds * ds + s * d2s));
}

double variance_at(const EffortVarianceModel& model, double effort) {
  if (!model.effort_set().contains(effort)) {
    throw DomainError("effort " + describe(effort) + " is outside the effort set");
  }
  const double s = model.sigma(effort);
  return s * s;
}

}  // namespace datamarket
