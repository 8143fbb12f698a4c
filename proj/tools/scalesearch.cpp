// SPDX-License-Identifier: Apache-2.0
// scalesearch: verifier-guided search over scale-wise generators.
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "scalesearch/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Verifier-guided inference-time search for scale-wise generators"};
  app.require_subcommand(1);

  struct Args {
    std::string config;
    std::string out;
    std::size_t parallel = 0;
    std::string remote_generator;
    std::string remote_verifier;
    std::vector<double> temperatures;
  };
  Args args;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", args.config, "JSON config file")->required();
    sub->add_option("--out", args.out, "Output directory (overrides the config)");
    sub->add_option("--parallel", args.parallel, "Worker threads for per-prompt runs")
        ->check(CLI::PositiveNumber);
    sub->add_option("--remote-generator", args.remote_generator,
                    "Generator endpoint, e.g. http://127.0.0.1:8080");
    sub->add_option("--remote-verifier", args.remote_verifier, "Verifier endpoint");
  };
  auto* run = app.add_subcommand("run", "Search every configured prompt");
  auto* scaling = app.add_subcommand("scaling", "Expected best-of-k curves and log fits");
  auto* bench = app.add_subcommand("bench", "Compare strategies over seeded trials");
  for (auto* sub : {run, scaling, bench}) add_common(sub);
  bench->add_option("--temperatures", args.temperatures,
                    "Temperature sweep, one table block per value")
      ->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  scalesearch::CommandOverrides overrides;
  if (!args.out.empty()) overrides.out = args.out;
  if (args.parallel > 0) overrides.parallel = args.parallel;
  if (!args.remote_generator.empty()) overrides.remote_generator = args.remote_generator;
  if (!args.remote_verifier.empty()) overrides.remote_verifier = args.remote_verifier;
  overrides.temperatures = args.temperatures;

  const std::string command = app.get_subcommands().front()->get_name();
  return scalesearch::run_command(command, args.config, overrides, std::cout, std::cerr);
}
