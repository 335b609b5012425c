#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "datamarket/equilibrium.hpp"
#include "datamarket/market.hpp"
#include "datamarket/welfare.hpp"

namespace datamarket {

inline constexpr int kSchemaVersion = 1;

/// Shortest decimal that reads back to the same double; "nan", "inf", "-inf" otherwise.
std::string format_double(double value);

/// Parse a scenario document. Syntax errors carry the line number; semantic
/// errors carry the field path (for example "aggregators[1].query_distribution").
/// The returned scenario is canonical.
MarketScenario parse_scenario(std::string_view text);

/// Canonical document: sorted keys, canonical source/aggregator order,
/// round-trip decimals. Custom variance families cannot be serialized.
std::string serialize_scenario(const MarketScenario& scenario);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);
MarketScenario load_scenario(const std::filesystem::path& path);

std::string serialize_result(const EquilibriumResult& result, const DerivedParameters& params);

/// Rebuild a result for `params`. The a and c tables come from the document;
/// totals, efforts and the polytope are recomputed from a.
EquilibriumResult parse_result(std::string_view text, const DerivedParameters& params);

std::string serialize_derived(const DerivedParameters& params);
std::string serialize_validation(const ValidationReport& report);
std::string serialize_certificate(const Certificate& certificate);
std::string serialize_welfare(const WelfareReport& report, const DerivedParameters& params);

/// CSV with a "# schema: xi_matrix/1" line, then one row per (source, aggregator) pair.
std::string xi_matrix_csv(const DerivedParameters& params);
/// CSV with a "# schema: alpha_sweep/1" line and columns alpha,rho,status,max_a_total.
std::string alpha_sweep_csv(const std::vector<AlphaSweepRow>& rows);

}  // namespace datamarket
