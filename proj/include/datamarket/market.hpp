#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "datamarket/effort_models.hpp"
#include "datamarket/estimators.hpp"

namespace datamarket {

struct DataSourceSpec {
  std::string id;
  FeaturePoint feature;
  EffortVarianceModel effort_model;
  /// Aggregator ids this source sells to (B_s).
  std::vector<std::string> sharing_set;
};

struct AggregatorSpec {
  std::string id;
  EstimatorSpec estimator;
  QueryDistribution query_dist;
  /// zeta_j^b keyed by rival id j; missing rivals have weight 0.
  std::map<std::string, double> competition_weights;
  /// eta^b; demands are divided by it when parameters are derived.
  double payment_scale = 1.0;
};

enum class ParameterMode { estimator_derived, direct };

/// Contract parameters supplied as data instead of derived from estimators.
struct DirectParameters {
  /// beta[aggregator][source]
  std::map<std::string, std::map<std::string, double>> beta;
  /// xi[aggregator][i][l]
  std::map<std::string, std::map<std::string, std::map<std::string, double>>> xi;
};

struct MarketScenario {
  std::vector<DataSourceSpec> sources;
  std::vector<AggregatorSpec> aggregators;
  LinearFunction ground_truth;
  ParameterMode mode = ParameterMode::estimator_derived;
  DirectParameters direct;

  /// Sort sources and aggregators by id and every sharing set by id. All
  /// derivations index sources and aggregators in this order.
  void canonicalize();
};

/// (source index, aggregator index) with the aggregator in the source's sharing set.
struct PairIndex {
  std::size_t source = 0;
  std::size_t aggregator = 0;
  friend bool operator==(const PairIndex&, const PairIndex&) = default;
};

/// Sharing topology of a canonical scenario in index form.
class MarketStructure {
 public:
  MarketStructure() = default;
  explicit MarketStructure(const MarketScenario& scenario);
  MarketStructure(std::size_t num_sources, std::size_t num_aggregators,
                  std::vector<std::vector<std::size_t>> sharing);

  std::size_t num_sources() const noexcept { return sharing_.size(); }
  std::size_t num_aggregators() const noexcept { return members_.size(); }
  std::size_t num_pairs() const noexcept { return pairs_.size(); }

  /// B_s, ascending.
  const std::vector<std::size_t>& sharing(std::size_t source) const { return sharing_.at(source); }
  /// S_b, ascending.
  const std::vector<std::size_t>& members(std::size_t aggregator) const { return members_.at(aggregator); }
  /// Pairs in lexicographic (source, aggregator) order; this is the row order of Xi.
  const std::vector<PairIndex>& pairs() const noexcept { return pairs_; }

  std::optional<std::size_t> pair_index(std::size_t source, std::size_t aggregator) const;
  bool shares(std::size_t source, std::size_t aggregator) const { return pair_index(source, aggregator).has_value(); }
  /// Position of `source` inside members(aggregator).
  std::optional<std::size_t> member_position(std::size_t aggregator, std::size_t source) const;

 private:
  void build();

  std::vector<std::vector<std::size_t>> sharing_;
  std::vector<std::vector<std::size_t>> members_;
  std::vector<PairIndex> pairs_;
  std::vector<std::ptrdiff_t> lookup_;  // num_sources x num_aggregators, -1 when absent
};

/// Values indexed by sharing pairs (s, b).
class PairTable {
 public:
  PairTable() = default;
  explicit PairTable(const MarketStructure& structure, double fill = 0.0);

  std::optional<double> find(std::size_t source, std::size_t aggregator) const;
  double at(std::size_t source, std::size_t aggregator) const;
  double& at(std::size_t source, std::size_t aggregator);

  std::vector<double>& values() noexcept { return values_; }
  const std::vector<double>& values() const noexcept { return values_; }
  const MarketStructure& structure() const noexcept { return structure_; }

 private:
  MarketStructure structure_;
  std::vector<double> values_;
};

/// xi^b_{i,l} for i, l in S_b, one square block per aggregator in member order.
class XiTable {
 public:
  XiTable() = default;
  explicit XiTable(const MarketStructure& structure);

  std::optional<double> find(std::size_t aggregator, std::size_t i, std::size_t l) const;
  double at(std::size_t aggregator, std::size_t i, std::size_t l) const;
  double& at(std::size_t aggregator, std::size_t i, std::size_t l);
  const Eigen::MatrixXd& block(std::size_t aggregator) const { return blocks_.at(aggregator); }
  Eigen::MatrixXd& block(std::size_t aggregator) { return blocks_.at(aggregator); }
  const MarketStructure& structure() const noexcept { return structure_; }

 private:
  MarketStructure structure_;
  std::vector<Eigen::MatrixXd> blocks_;
};

struct GammaTables {
  PairTable gamma;
  std::vector<double> gamma_total;
};

/// Xi together with the row index map (row r <-> structure.pairs()[r]).
struct XiMatrix {
  Eigen::MatrixXd matrix;
  std::vector<PairIndex> index;
};

/// Everything the equilibrium and welfare computations need, with sources and
/// aggregators in canonical order.
struct DerivedParameters {
  std::vector<std::string> source_ids;
  std::vector<std::string> aggregator_ids;
  MarketStructure structure;
  std::vector<EffortVarianceModel> models;
  ParameterMode mode = ParameterMode::estimator_derived;
  PairTable beta;
  XiTable xi;
  PairTable gamma;
  std::vector<double> gamma_total;
  std::vector<IncentiveBounds> bounds;
  XiMatrix xi_matrix;

  bool all_bounded() const;
  bool all_unbounded() const;
  std::size_t source_index(const std::string& id) const;
  std::size_t aggregator_index(const std::string& id) const;
};

PairTable derive_beta(const MarketScenario& scenario);
XiTable derive_xi(const MarketScenario& scenario);
GammaTables derive_gamma(const MarketScenario& scenario, const PairTable& beta);
XiMatrix assemble_xi_matrix(const MarketScenario& scenario, const XiTable& xi);
/// Same assembly from a structure alone.
XiMatrix assemble_xi_matrix(const XiTable& xi);

/// Runs every derivation. The scenario must be canonical.
DerivedParameters derive_parameters(const MarketScenario& scenario);

struct Violation {
  std::string code;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  /// Informational entries such as payment-scale normalization.
  std::vector<std::string> notes;

  bool ok() const noexcept { return violations.empty(); }
  bool has(const std::string& code) const;
};

ValidationReport validate_scenario(const MarketScenario& scenario);

/// Build a direct-mode scenario with full sharing in which every aggregator
/// values every source with `beta`, every off-diagonal xi equals `xi_off`, and
/// all sources share `model`. Ids are s1.., b1...
MarketScenario symmetric_direct_scenario(std::size_t num_sources, std::size_t num_aggregators,
                                         double beta, double xi_off,
                                         const EffortVarianceModel& model);

}  // namespace datamarket
