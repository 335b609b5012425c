#include "datamarket/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "datamarket/errors.hpp"

namespace datamarket {

using nlohmann::json;

namespace {

// ------------------------------------------------------------ json helpers

[[noreturn]] void fail(const std::string& path, const std::string& message) { throw ParseError(path, 0, message); }

std::string child(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
std::string item(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

void only_keys(const json& obj, const std::string& path, std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) fail(path, "expected an object");
  for (const auto& [key, _] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) fail(child(path, key), "unknown field");
  }
}

const json& need(const json& obj, const std::string& key, const std::string& path) {
  const auto it = obj.find(key);
  if (it == obj.end()) fail(child(path, key), "missing field");
  return *it;
}

double number_at(const json& v, const std::string& path) {
  if (!v.is_number()) fail(path, "expected a number");
  return v.get<double>();
}

std::string string_at(const json& v, const std::string& path) {
  if (!v.is_string()) fail(path, "expected a string");
  return v.get<std::string>();
}

std::vector<double> vector_at(const json& v, const std::string& path) {
  if (!v.is_array()) fail(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number_at(v[i], item(path, i)));
  return out;
}

json number_json(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

std::size_t line_of(std::string_view text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

json parse_json(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const std::size_t byte = e.byte > 0 ? e.byte - 1 : 0;
    std::string msg = e.what();
    const auto colon = msg.rfind(": ");
    if (colon != std::string::npos) msg = msg.substr(colon + 2);
    throw ParseError("", line_of(text, byte), msg);
  }
}

void check_header(const json& doc, std::string_view kind) {
  if (!doc.is_object()) fail("", "document must be an object");
  const json& version = need(doc, "schema_version", "");
  if (!version.is_number_integer() || version.get<long long>() != kSchemaVersion) {
    fail("schema_version", "unsupported schema version (expected " + std::to_string(kSchemaVersion) + ")");
  }
  if (!kind.empty()) {
    const std::string k = string_at(need(doc, "kind", ""), "kind");
    if (k != kind) fail("kind", "expected \"" + std::string(kind) + "\", got \"" + k + "\"");
  }
}

// ------------------------------------------------------------ effort models

EffortVarianceModel parse_effort(const json& obj, const std::string& path) {
  only_keys(obj, path, {"family", "sigma0", "lambda", "k", "effort_set"});
  const std::string family = string_at(need(obj, "family", path), child(path, "family"));
  const double sigma0 = number_at(need(obj, "sigma0", path), child(path, "sigma0"));

  EffortSet set = EffortSet::unbounded();
  if (obj.contains("effort_set")) {
    const std::string sp = child(path, "effort_set");
    const json& es = obj.at("effort_set");
    only_keys(es, sp, {"kind", "e_max"});
    const std::string kind = string_at(need(es, "kind", sp), child(sp, "kind"));
    if (kind == "bounded") {
      try {
        set = EffortSet::bounded(number_at(need(es, "e_max", sp), child(sp, "e_max")));
      } catch (const DomainError& e) {
        fail(child(sp, "e_max"), e.what());
      }
    } else if (kind == "unbounded") {
      if (es.contains("e_max")) fail(child(sp, "e_max"), "unbounded effort sets take no e_max");
    } else {
      fail(child(sp, "kind"), "expected \"bounded\" or \"unbounded\"");
    }
  }

  try {
    if (family == "exponential") {
      if (obj.contains("k")) fail(child(path, "k"), "the exponential family takes lambda, not k");
      return EffortVarianceModel::exponential(sigma0, number_at(need(obj, "lambda", path), child(path, "lambda")), set);
    }
    if (family == "inverse_power") {
      if (obj.contains("lambda")) fail(child(path, "lambda"), "the inverse_power family takes k, not lambda");
      return EffortVarianceModel::inverse_power(sigma0, number_at(need(obj, "k", path), child(path, "k")), set);
    }
  } catch (const DomainError& e) {
    fail(path, e.what());
  }
  fail(child(path, "family"), "unknown variance family \"" + family + "\"");
}

json effort_json(const EffortVarianceModel& model) {
  json out;
  if (const auto* f = std::get_if<ExponentialFamily>(&model.family())) {
    out["family"] = "exponential";
    out["sigma0"] = f->sigma0;
    out["lambda"] = f->lambda;
  } else if (const auto* g = std::get_if<InversePowerFamily>(&model.family())) {
    out["family"] = "inverse_power";
    out["sigma0"] = g->sigma0;
    out["k"] = g->k;
  } else {
    throw DomainError("custom variance families cannot be serialized");
  }
  json set;
  if (model.effort_set().is_bounded()) {
    set["kind"] = "bounded";
    set["e_max"] = model.effort_set().e_max;
  } else {
    set["kind"] = "unbounded";
  }
  out["effort_set"] = set;
  return out;
}

// ------------------------------------------------------------ scenario pieces

QueryDistribution parse_query(const json& v, const std::string& path) {
  if (!v.is_array()) fail(path, "expected an array of atoms");
  QueryDistribution q;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::string ap = item(path, i);
    only_keys(v[i], ap, {"point", "probability"});
    q.atoms.push_back({vector_at(need(v[i], "point", ap), child(ap, "point")),
                       number_at(need(v[i], "probability", ap), child(ap, "probability"))});
  }
  return q;
}

std::map<std::string, double> parse_number_map(const json& v, const std::string& path) {
  if (!v.is_object()) fail(path, "expected an object of numbers");
  std::map<std::string, double> out;
  for (const auto& [k, x] : v.items()) out[k] = number_at(x, child(path, k));
  return out;
}

}  // namespace

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

MarketScenario parse_scenario(std::string_view text) {
  const json doc = parse_json(text);
  check_header(doc, "");
  only_keys(doc, "", {"schema_version", "mode", "ground_truth", "sources", "aggregators", "direct"});

  MarketScenario sc;
  const std::string mode = string_at(need(doc, "mode", ""), "mode");
  if (mode == "direct") sc.mode = ParameterMode::direct;
  else if (mode == "estimator_derived") sc.mode = ParameterMode::estimator_derived;
  else fail("mode", "expected \"direct\" or \"estimator_derived\"");
  const bool direct = sc.mode == ParameterMode::direct;

  if (doc.contains("ground_truth")) {
    const json& gt = doc.at("ground_truth");
    only_keys(gt, "ground_truth", {"coefficients", "intercept"});
    sc.ground_truth.coefficients = vector_at(need(gt, "coefficients", "ground_truth"), "ground_truth.coefficients");
    sc.ground_truth.intercept = number_at(need(gt, "intercept", "ground_truth"), "ground_truth.intercept");
  } else if (!direct) {
    fail("ground_truth", "missing field");
  }

  const json& sources = need(doc, "sources", "");
  if (!sources.is_array()) fail("sources", "expected an array");
  std::set<std::string> seen;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    const std::string p = item("sources", i);
    const json& s = sources[i];
    only_keys(s, p, {"id", "feature", "effort", "sharing_set"});
    const std::string id = string_at(need(s, "id", p), child(p, "id"));
    if (!seen.insert(id).second) fail(child(p, "id"), "duplicate id \"" + id + "\"");
    FeaturePoint feature;
    if (s.contains("feature")) feature = vector_at(s.at("feature"), child(p, "feature"));
    else if (!direct) fail(child(p, "feature"), "missing field");
    EffortVarianceModel model = parse_effort(need(s, "effort", p), child(p, "effort"));
    const json& share = need(s, "sharing_set", p);
    if (!share.is_array()) fail(child(p, "sharing_set"), "expected an array of aggregator ids");
    std::vector<std::string> sharing;
    for (std::size_t k = 0; k < share.size(); ++k) sharing.push_back(string_at(share[k], item(child(p, "sharing_set"), k)));
    sc.sources.push_back({id, std::move(feature), std::move(model), std::move(sharing)});
  }

  const json& aggs = need(doc, "aggregators", "");
  if (!aggs.is_array()) fail("aggregators", "expected an array");
  for (std::size_t i = 0; i < aggs.size(); ++i) {
    const std::string p = item("aggregators", i);
    const json& b = aggs[i];
    only_keys(b, p, {"id", "estimator", "query_distribution", "competition_weights", "payment_scale"});
    AggregatorSpec agg;
    agg.id = string_at(need(b, "id", p), child(p, "id"));
    if (!seen.insert(agg.id).second) fail(child(p, "id"), "duplicate id \"" + agg.id + "\"");
    if (b.contains("estimator")) {
      const std::string kind = string_at(b.at("estimator"), child(p, "estimator"));
      if (kind != "ols_with_intercept") fail(child(p, "estimator"), "unknown estimator \"" + kind + "\"");
    }
    if (b.contains("query_distribution")) agg.query_dist = parse_query(b.at("query_distribution"), child(p, "query_distribution"));
    else if (!direct) fail(child(p, "query_distribution"), "missing field");
    if (!direct || !agg.query_dist.atoms.empty()) {
      try {
        agg.query_dist.validate();
      } catch (const DomainError& e) {
        fail(child(p, "query_distribution"), "query distribution of " + agg.id + ": " + e.what());
      }
    }
    if (b.contains("competition_weights")) {
      agg.competition_weights = parse_number_map(b.at("competition_weights"), child(p, "competition_weights"));
    }
    if (b.contains("payment_scale")) agg.payment_scale = number_at(b.at("payment_scale"), child(p, "payment_scale"));
    sc.aggregators.push_back(std::move(agg));
  }

  if (doc.contains("direct")) {
    if (!direct) fail("direct", "direct tables are only allowed in direct mode");
    const json& d = doc.at("direct");
    only_keys(d, "direct", {"beta", "xi"});
    const json& beta = need(d, "beta", "direct");
    if (!beta.is_object()) fail("direct.beta", "expected an object");
    for (const auto& [b, row] : beta.items()) sc.direct.beta[b] = parse_number_map(row, "direct.beta." + b);
    if (d.contains("xi")) {
      const json& xi = d.at("xi");
      if (!xi.is_object()) fail("direct.xi", "expected an object");
      for (const auto& [b, block] : xi.items()) {
        const std::string bp = "direct.xi." + b;
        if (!block.is_object()) fail(bp, "expected an object");
        for (const auto& [i, row] : block.items()) {
          auto values = parse_number_map(row, bp + "." + i);
          const auto diag = values.find(i);
          if (diag != values.end() && diag->second != 1.0) fail(bp + "." + i + "." + i, "diagonal xi must be 1");
          sc.direct.xi[b][i] = std::move(values);
        }
      }
    }
  } else if (direct) {
    fail("direct", "missing field");
  }

  sc.canonicalize();
  return sc;
}

std::string serialize_scenario(const MarketScenario& input) {
  MarketScenario sc = input;
  sc.canonicalize();
  json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["mode"] = sc.mode == ParameterMode::direct ? "direct" : "estimator_derived";
  doc["ground_truth"] = {{"coefficients", sc.ground_truth.coefficients}, {"intercept", sc.ground_truth.intercept}};
  json sources = json::array();
  for (const auto& s : sc.sources) {
    sources.push_back({{"id", s.id},
                       {"feature", s.feature},
                       {"effort", effort_json(s.effort_model)},
                       {"sharing_set", s.sharing_set}});
  }
  doc["sources"] = sources;
  json aggs = json::array();
  for (const auto& b : sc.aggregators) {
    json atoms = json::array();
    for (const auto& a : b.query_dist.atoms) atoms.push_back({{"point", a.point}, {"probability", a.probability}});
    aggs.push_back({{"id", b.id},
                    {"estimator", "ols_with_intercept"},
                    {"query_distribution", atoms},
                    {"competition_weights", b.competition_weights},
                    {"payment_scale", b.payment_scale}});
  }
  doc["aggregators"] = aggs;
  if (sc.mode == ParameterMode::direct) {
    json beta = json::object();
    for (const auto& [b, row] : sc.direct.beta) beta[b] = row;
    json xi = json::object();
    for (const auto& [b, block] : sc.direct.xi) {
      for (const auto& [i, row] : block) xi[b][i] = row;
    }
    doc["direct"] = {{"beta", beta}, {"xi", xi}};
  }
  return doc.dump(2) + "\n";
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string(), 0, "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error("failed writing " + path.string());
}

MarketScenario load_scenario(const std::filesystem::path& path) { return parse_scenario(read_text_file(path)); }

// ------------------------------------------------------------ results

std::string serialize_result(const EquilibriumResult& result, const DerivedParameters& params) {
  json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["kind"] = "equilibrium_result";
  doc["status"] = to_string(result.status);
  doc["diagnostics"] = {{"spectral_radius", number_json(result.diagnostics.spectral_radius)},
                        {"iterations", result.diagnostics.iterations},
                        {"max_residual", number_json(result.diagnostics.max_residual)},
                        {"marginal", result.diagnostics.marginal}};
  json pairs = json::array();
  json sources = json::array();
  if (result.point) {
    const auto& pt = *result.point;
    for (const auto& [s, b] : params.structure.pairs()) {
      pairs.push_back({{"source", params.source_ids[s]},
                       {"aggregator", params.aggregator_ids[b]},
                       {"a", pt.a.at(s, b)},
                       {"c", pt.canonical_c.at(s, b)},
                       {"q", pt.polytope.floor.at(s, b)}});
    }
    for (std::size_t s = 0; s < params.source_ids.size(); ++s) {
      sources.push_back({{"id", params.source_ids[s]},
                         {"a_total", pt.a_total[s]},
                         {"effort", pt.efforts[s]},
                         {"q_total", pt.polytope.total[s]},
                         {"polytope_dimension", pt.polytope.dimension[s]}});
    }
  }
  doc["pairs"] = pairs;
  doc["sources"] = sources;
  return doc.dump(2) + "\n";
}

EquilibriumResult parse_result(std::string_view text, const DerivedParameters& params) {
  const json doc = parse_json(text);
  check_header(doc, "equilibrium_result");
  only_keys(doc, "", {"schema_version", "kind", "status", "diagnostics", "pairs", "sources"});
  EquilibriumResult result;
  try {
    result.status = parse_status(string_at(need(doc, "status", ""), "status"));
  } catch (const DomainError& e) {
    fail("status", e.what());
  }
  if (doc.contains("diagnostics")) {
    const json& d = doc.at("diagnostics");
    only_keys(d, "diagnostics", {"spectral_radius", "iterations", "max_residual", "marginal"});
    if (d.contains("spectral_radius") && !d.at("spectral_radius").is_null()) {
      result.diagnostics.spectral_radius = number_at(d.at("spectral_radius"), "diagnostics.spectral_radius");
    }
    if (d.contains("iterations")) result.diagnostics.iterations = d.at("iterations").get<std::size_t>();
    if (d.contains("max_residual") && !d.at("max_residual").is_null()) {
      result.diagnostics.max_residual = number_at(d.at("max_residual"), "diagnostics.max_residual");
    }
    if (d.contains("marginal")) result.diagnostics.marginal = d.at("marginal").get<bool>();
  }
  const json& pairs = need(doc, "pairs", "");
  if (!pairs.is_array()) fail("pairs", "expected an array");
  if (result.status == EquilibriumStatus::none) {
    if (!pairs.empty()) fail("pairs", "a result with status none carries no pairs");
    return result;
  }
  const auto& st = params.structure;
  PairTable a(st), c(st);
  std::vector<bool> filled(st.num_pairs(), false);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const std::string p = item("pairs", k);
    only_keys(pairs[k], p, {"source", "aggregator", "a", "c", "q"});
    const std::string sid = string_at(need(pairs[k], "source", p), child(p, "source"));
    const std::string bid = string_at(need(pairs[k], "aggregator", p), child(p, "aggregator"));
    std::optional<std::size_t> idx;
    try {
      idx = st.pair_index(params.source_index(sid), params.aggregator_index(bid));
    } catch (const ShapeError&) {
    }
    if (!idx) fail(p, "(" + sid + "," + bid + ") is not a sharing pair of the scenario");
    if (filled[*idx]) fail(p, "pair (" + sid + "," + bid + ") listed twice");
    filled[*idx] = true;
    a.values()[*idx] = number_at(need(pairs[k], "a", p), child(p, "a"));
    c.values()[*idx] = number_at(need(pairs[k], "c", p), child(p, "c"));
  }
  if (std::find(filled.begin(), filled.end(), false) != filled.end()) fail("pairs", "result does not cover every sharing pair");
  EquilibriumPoint pt;
  pt.a_total = total_incentives(a);
  pt.efforts = equilibrium_efforts(a, params);
  pt.polytope = polytope(a, params);
  pt.canonical_c = std::move(c);
  pt.a = std::move(a);
  result.point = std::move(pt);
  return result;
}

std::string serialize_derived(const DerivedParameters& params) {
  json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["kind"] = "derived_parameters";
  doc["mode"] = params.mode == ParameterMode::direct ? "direct" : "estimator_derived";
  json sources = json::array();
  for (std::size_t s = 0; s < params.source_ids.size(); ++s) {
    sources.push_back({{"id", params.source_ids[s]},
                       {"gamma_total", params.gamma_total[s]},
                       {"a_lower", number_json(params.bounds[s].a_lower)},
                       {"a_upper", number_json(params.bounds[s].a_upper)}});
  }
  doc["sources"] = sources;
  json pairs = json::array();
  for (const auto& [s, b] : params.structure.pairs()) {
    pairs.push_back({{"source", params.source_ids[s]},
                     {"aggregator", params.aggregator_ids[b]},
                     {"beta", params.beta.at(s, b)},
                     {"gamma", params.gamma.at(s, b)}});
  }
  doc["pairs"] = pairs;
  json xi = json::object();
  for (std::size_t b = 0; b < params.structure.num_aggregators(); ++b) {
    for (std::size_t i : params.structure.members(b)) {
      for (std::size_t l : params.structure.members(b)) {
        xi[params.aggregator_ids[b]][params.source_ids[i]][params.source_ids[l]] = params.xi.at(b, i, l);
      }
    }
  }
  doc["xi"] = xi;
  json index = json::array();
  for (const auto& [s, b] : params.structure.pairs()) index.push_back(params.source_ids[s] + "|" + params.aggregator_ids[b]);
  json rows = json::array();
  const Eigen::MatrixXd& m = params.xi_matrix.matrix;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  doc["xi_matrix"] = {{"index", index}, {"rows", rows}};
  return doc.dump(2) + "\n";
}

std::string serialize_validation(const ValidationReport& report) {
  json violations = json::array();
  for (const auto& v : report.violations) violations.push_back({{"code", v.code}, {"message", v.message}});
  json doc = {{"schema_version", kSchemaVersion},
              {"kind", "validation_report"},
              {"ok", report.ok()},
              {"violations", violations},
              {"notes", report.notes}};
  return doc.dump(2) + "\n";
}

std::string serialize_certificate(const Certificate& certificate) {
  json checks = json::array();
  for (const auto& c : certificate.checks) {
    checks.push_back({{"name", c.name}, {"passed", c.passed}, {"worst", number_json(c.worst)}, {"detail", c.detail}});
  }
  json doc = {{"schema_version", kSchemaVersion},
              {"kind", "certificate"},
              {"certified", certificate.certified},
              {"clamped_pairs", certificate.clamped_pairs},
              {"checks", checks}};
  return doc.dump(2) + "\n";
}

std::string serialize_welfare(const WelfareReport& report, const DerivedParameters& params) {
  json sources = json::array();
  for (std::size_t s = 0; s < params.source_ids.size(); ++s) {
    sources.push_back({{"id", params.source_ids[s]},
                       {"equilibrium_effort", report.equilibrium_efforts[s]},
                       {"optimal_effort", report.optimal_efforts[s]}});
  }
  json doc = {{"schema_version", kSchemaVersion},
              {"kind", "welfare_report"},
              {"cost_at_equilibrium", report.cost_at_equilibrium},
              {"cost_at_optimum", report.cost_at_optimum},
              {"poa", report.poa},
              {"efficient_possible", report.efficient_possible},
              {"offdiagonal_xi_max", report.offdiagonal_xi_max},
              {"coupling_max", report.coupling_max},
              {"sources", sources}};
  return doc.dump(2) + "\n";
}

std::string xi_matrix_csv(const DerivedParameters& params) {
  std::ostringstream os;
  os << "# schema: xi_matrix/1\n";
  std::vector<std::string> labels;
  for (const auto& [s, b] : params.structure.pairs()) labels.push_back(params.source_ids[s] + "|" + params.aggregator_ids[b]);
  os << "row";
  for (const auto& l : labels) os << ',' << l;
  os << '\n';
  const Eigen::MatrixXd& m = params.xi_matrix.matrix;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    os << labels[static_cast<std::size_t>(r)];
    for (Eigen::Index c = 0; c < m.cols(); ++c) os << ',' << format_double(m(r, c));
    os << '\n';
  }
  return os.str();
}

std::string alpha_sweep_csv(const std::vector<AlphaSweepRow>& rows) {
  std::ostringstream os;
  os << "# schema: alpha_sweep/1\n";
  os << "alpha,rho,status,max_a_total\n";
  for (const auto& r : rows) {
    os << format_double(r.alpha) << ',' << format_double(r.rho) << ',' << to_string(r.status) << ','
       << format_double(r.max_a_total) << '\n';
  }
  return os.str();
}

}  // namespace datamarket
