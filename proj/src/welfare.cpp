#include "datamarket/welfare.hpp"

#include <algorithm>
#include <cmath>

#include "datamarket/errors.hpp"

namespace datamarket {

double social_cost(const std::vector<double>& efforts, const DerivedParameters& params) {
  if (efforts.size() != params.models.size()) throw ShapeError("one effort per source is required");
  double cost = 0.0;
  for (std::size_t s = 0; s < efforts.size(); ++s) {
    cost += params.gamma_total[s] * variance_at(params.models[s], efforts[s]) + efforts[s];
  }
  return cost;
}

std::vector<double> optimal_efforts(const DerivedParameters& params) {
  std::vector<double> out(params.models.size());
  for (std::size_t s = 0; s < out.size(); ++s) {
    const double demand = params.gamma_total[s];
    const auto& bnd = params.bounds[s];
    if (!(demand >= bnd.a_lower * (1.0 - kIncentiveSlack))) {
      throw ValidationError("total demand of " + params.source_ids[s] + " is below a_lower");
    }
    out[s] = effort_response(params.models[s], std::clamp(demand, bnd.a_lower, bnd.a_upper));
  }
  return out;
}

double offdiagonal_xi_max(const DerivedParameters& params) {
  double worst = 0.0;
  for (std::size_t b = 0; b < params.structure.num_aggregators(); ++b) {
    const Eigen::MatrixXd& blk = params.xi.block(b);
    for (Eigen::Index i = 0; i < blk.rows(); ++i) {
      for (Eigen::Index l = 0; l < blk.cols(); ++l) {
        if (i != l) worst = std::max(worst, blk(i, l));
      }
    }
  }
  return worst;
}

bool efficiency_predicate(const DerivedParameters& params) {
  const Eigen::MatrixXd& xi = params.xi_matrix.matrix;
  const double coupling = xi.size() == 0 ? 0.0 : xi.maxCoeff();
  return params.mode == ParameterMode::direct ? coupling == 0.0 : coupling <= kEstimatorCouplingZero;
}

WelfareReport price_of_anarchy(const EquilibriumResult& result, const DerivedParameters& params) {
  if (!result.point) throw ValidationError("price of anarchy needs a solved equilibrium");
  WelfareReport report;
  report.equilibrium_efforts = result.point->efforts;
  report.optimal_efforts = optimal_efforts(params);
  report.cost_at_equilibrium = social_cost(report.equilibrium_efforts, params);
  report.cost_at_optimum = social_cost(report.optimal_efforts, params);
  if (!(report.cost_at_optimum > 0.0)) throw NumericalFailureError("optimal social cost is not positive", 0.0);
  report.poa = report.cost_at_equilibrium / report.cost_at_optimum;
  report.efficient_possible = efficiency_predicate(params);
  report.offdiagonal_xi_max = offdiagonal_xi_max(params);
  const Eigen::MatrixXd& xi = params.xi_matrix.matrix;
  report.coupling_max = xi.size() == 0 ? 0.0 : xi.maxCoeff();
  return report;
}

}  // namespace datamarket
