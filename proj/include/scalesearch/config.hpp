// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "scalesearch/core.hpp"
#include "scalesearch/search.hpp"
#include "scalesearch/verifier.hpp"

namespace scalesearch {

/// Bad or inconsistent configuration. The CLI maps it to exit status 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ScalingOptions {
  std::uint32_t samples = 500;
  std::vector<std::uint32_t> ks;  // empty: log-spaced over [1, samples]
  std::uint32_t repeats = 10;
  std::vector<std::string> verifiers;  // empty: every roster verifier
};

struct BenchOptions {
  std::vector<SearchConfig> grid;
  std::uint32_t trials = 10;
  /// Guiding rules; empty means each grid entry's own selection.
  std::vector<SelectionRule> selections;
  std::vector<std::string> eval_metrics{"alignment", "quality"};
  std::vector<double> temperatures;  // empty: the search temperature only
  std::uint32_t cost_calls = 200;
};

/// Everything one CLI invocation needs, parsed from a single JSON document.
struct RunConfig {
  std::filesystem::path source;
  SchedulePtr schedule;
  Seed task_seed = 0;
  std::vector<double> guidance{3.0};
  std::vector<std::string> prompts;
  SearchConfig search;
  std::vector<VerifierSpec> verifiers;
  std::filesystem::path output_dir = "out";
  std::vector<std::string> formats{"json", "csv", "svg"};
  std::string remote_generator;
  std::string remote_verifier;
  std::size_t parallel = 1;
  ScalingOptions scaling;
  BenchOptions bench;

  bool wants(std::string_view format) const;
};

/// Parses a config document. Relative paths (prompt files, output dir) are
/// resolved against `base_dir`. Throws ConfigError.
RunConfig parse_run_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);

/// Reads and parses a config file. Throws ConfigError naming the file on
/// any read or parse failure.
RunConfig load_run_config(const std::filesystem::path& path);

/// UTF-8 prompts, one per line; blank lines and lines starting with '#' are
/// skipped. Throws ConfigError if the file is missing or yields no prompt.
std::vector<std::string> read_prompt_file(const std::filesystem::path& path);

/// Replaces ${NAME} with the environment value (empty when unset).
std::string expand_env(std::string_view text);

/// Parses one search block ({"strategy": "beam", "w": 3, "c": 5, ...});
/// unspecified fields fall back to `defaults`.
SearchConfig parse_search_config(const nlohmann::json& j, const SearchConfig& defaults);
SelectionRule parse_selection(const nlohmann::json& j);
VerifierSpec parse_verifier(const nlohmann::json& j);

/// clip-like, aesthetic-like and preference-like with the given noise.
std::vector<VerifierSpec> default_verifiers(double noise_sigma = 0.05);

}  // namespace scalesearch
