// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "scalesearch/analysis.hpp"
#include "scalesearch/ledger.hpp"
#include "scalesearch/search.hpp"
#include "scalesearch/verifier.hpp"

namespace scalesearch::report {

using json = nlohmann::json;

/// A header plus rows of string cells. Writing quotes cells per RFC 4180;
/// parsing accepts what writing produces.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const;
  friend bool operator==(const CsvTable&, const CsvTable&) = default;
};

std::string write_csv(const CsvTable& table);
/// Throws std::invalid_argument on ragged rows or unterminated quotes.
CsvTable parse_csv(std::string_view text);

/// Shortest decimal text that parses back to the same double.
std::string format_number(double value);

json to_json(const BudgetLedger& ledger);
BudgetLedger ledger_from_json(const json& j);
json to_json(const SelectionRule& rule);
json to_json(const SearchConfig& config);
json to_json(const ScoredCandidate& candidate);
json to_json(const StepRecord& step);
json to_json(const SearchResult& result);
json to_json(const ScalingCurve& curve);
json to_json(const ComparisonReport& report);
json to_json(const CostProfile& profile);

// CSV schemas. Column order is part of the output contract.

/// prompt_index,prompt,config,nfes,images_verified,verifier_calls,cache_hits,cache_misses
inline constexpr std::string_view kLedgerColumns =
    "prompt_index,prompt,config,nfes,images_verified,verifier_calls,cache_hits,cache_misses";
/// prompt_index,phase,scale,slots,variance,nfes,images_verified,kept,scores
/// (kept lineages and scores are ';'-separated lists)
inline constexpr std::string_view kTraceColumns =
    "prompt_index,phase,scale,slots,variance,nfes,images_verified,kept,scores";
inline constexpr std::string_view kScalingColumns = "verifier,k,e_max,std";
inline constexpr std::string_view kFitColumns = "verifier,alpha,beta,r_squared";
/// Long form: one row per (temperature, config, selection, metric).
inline constexpr std::string_view kBenchColumns =
    "temperature,config,strategy,selection,images,nfes,metric,mean,std,count";
/// Wall-clock measurements only; kept apart from deterministic outputs.
inline constexpr std::string_view kCostColumns =
    "verifier,kind,calls,median_latency_us,peak_memory_bytes";

CsvTable empty_table(std::string_view columns);

void append_ledger_row(CsvTable& table, std::size_t prompt_index, std::string_view prompt,
                       std::string_view config, const BudgetLedger& ledger);
void append_trace_rows(CsvTable& table, std::size_t prompt_index,
                       std::span<const StepRecord> trace);
CsvTable scaling_table(std::span<const ScalingCurve> curves);
CsvTable fit_table(std::span<const ScalingCurve> curves);
void append_bench_rows(CsvTable& table, const ComparisonReport& report);
/// Table-1 layout: one row per (temperature, config, selection) with
/// images, nfes and a mean/std column pair per evaluation metric.
CsvTable bench_matrix(std::span<const ComparisonReport> reports);
void append_cost_row(CsvTable& table, const CostProfile& profile, std::string_view kind);

/// Line chart of expected max vs budget on a log-scaled x axis.
std::string scaling_svg(std::span<const ScalingCurve> curves, std::string_view title);

}  // namespace scalesearch::report
