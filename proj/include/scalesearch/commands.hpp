// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "scalesearch/analysis.hpp"
#include "scalesearch/config.hpp"
#include "scalesearch/verifier.hpp"

namespace scalesearch {

/// Command-line overrides applied on top of the config file.
struct CommandOverrides {
  std::optional<std::filesystem::path> out;
  std::optional<std::size_t> parallel;
  std::optional<std::string> remote_generator;
  std::optional<std::string> remote_verifier;
  std::vector<double> temperatures;
};

void apply_overrides(RunConfig& config, const CommandOverrides& overrides);

/// Roster for the configured verifiers. With a remote verifier endpoint every
/// verifier is scored there under its own id; without one, remote-kind specs
/// are a ConfigError.
VerifierRoster build_roster(const RunConfig& config);

/// Synthetic factory, or one that talks to the remote generator endpoint.
GeneratorFactory build_generator_factory(const RunConfig& config);

// Each command writes its outputs under config.output_dir and returns 0.
// Failures propagate as exceptions; run_command maps them to exit codes.
int cmd_run(const RunConfig& config, std::ostream& log);
int cmd_scaling(const RunConfig& config, std::ostream& log);
int cmd_bench(const RunConfig& config, std::ostream& log);

/// Loads the config, applies overrides and runs `command` ("run", "scaling"
/// or "bench"). Returns 0 on success, 2 on a configuration error and 1 on any
/// other failure, after printing one diagnostic line to `err`.
int run_command(const std::string& command, const std::filesystem::path& config_path,
                const CommandOverrides& overrides, std::ostream& log, std::ostream& err);

}  // namespace scalesearch
