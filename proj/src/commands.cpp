// SPDX-License-Identifier: Apache-2.0
#include "scalesearch/commands.hpp"

#include <fstream>
#include <memory>
#include <optional>
#include <ostream>

#include "scalesearch/parallel.hpp"
#include "scalesearch/remote.hpp"
#include "scalesearch/report.hpp"

namespace scalesearch {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::shared_ptr<ProtocolClient> make_client(const std::string& url) {
  try {
    return std::make_shared<ProtocolClient>(RemoteOptions{url});
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

void prepare_output(const RunConfig& config) {
  std::error_code ec;
  fs::create_directories(config.output_dir, ec);
  if (ec || !fs::is_directory(config.output_dir)) {
    throw ConfigError("cannot create output directory '" + config.output_dir.string() + "'");
  }
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  out.close();
  if (!out) throw std::runtime_error("failed to write '" + path.string() + "'");
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json schedule_json(const ScaleSchedule& s) {
  return {{"num_scales", s.num_scales()},
          {"tokens_per_scale", std::vector<std::uint32_t>(s.tokens_per_scale().begin(), s.tokens_per_scale().end())},
          {"vocab_size", s.vocab_size()}};
}

json task_json(const RunConfig& config) {
  return {{"seed", config.task_seed}, {"guidance", config.guidance}};
}

std::vector<double> full_guidance(const RunConfig& config) {
  if (config.guidance.size() == 1) {
    return std::vector<double>(config.schedule->num_scales(), config.guidance.front());
  }
  return config.guidance;
}

ExperimentSetup experiment(const RunConfig& config, VerifierRoster& roster) {
  ExperimentSetup setup;
  setup.schedule = config.schedule;
  setup.prompts = config.prompts;
  setup.guidance = config.guidance;
  setup.verifiers = &roster;
  setup.base_seed = config.task_seed;
  setup.make_generator = build_generator_factory(config);
  setup.threads = config.parallel;
  return setup;
}

}  // namespace

void apply_overrides(RunConfig& config, const CommandOverrides& overrides) {
  if (overrides.out) config.output_dir = *overrides.out;
  if (overrides.parallel) {
    if (*overrides.parallel < 1) throw ConfigError("--parallel must be >= 1");
    config.parallel = *overrides.parallel;
  }
  if (overrides.remote_generator) config.remote_generator = *overrides.remote_generator;
  if (overrides.remote_verifier) config.remote_verifier = *overrides.remote_verifier;
  if (!overrides.temperatures.empty()) {
    for (const double t : overrides.temperatures) {
      if (!(t > 0.0)) throw ConfigError("temperatures must be > 0");
    }
    config.bench.temperatures = overrides.temperatures;
  }
}

VerifierRoster build_roster(const RunConfig& config) {
  VerifierRoster roster;
  std::shared_ptr<ProtocolClient> client;
  if (!config.remote_verifier.empty()) client = make_client(config.remote_verifier);
  for (const auto& spec : config.verifiers) {
    if (client) {
      roster.add(std::make_shared<RemoteVerifier>(spec, client));
    } else if (spec.kind == VerifierKind::remote) {
      throw ConfigError("verifier '" + spec.id + "' is remote but no verifier endpoint is set");
    } else {
      roster.add(std::make_shared<SyntheticVerifier>(spec));
    }
  }
  return roster;
}

GeneratorFactory build_generator_factory(const RunConfig& config) {
  if (config.remote_generator.empty()) return synthetic_generator_factory();
  auto client = make_client(config.remote_generator);
  return [client](const SchedulePtr& schedule,
                  const PlantedTask& task) -> std::unique_ptr<Generator> {
    return std::make_unique<RemoteGenerator>(schedule, task.prompt, client);
  };
}

int cmd_run(const RunConfig& config, std::ostream& log) {
  prepare_output(config);
  auto roster = build_roster(config);
  const auto factory = build_generator_factory(config);
  const auto guidance = full_guidance(config);
  const std::size_t count = config.prompts.size();
  std::vector<std::optional<SearchResult>> results(count);

  parallel_for(count, config.parallel, [&](std::size_t p) {
    const auto& prompt = config.prompts[p];
    const auto task = PlantedTask::make(*config.schedule, prompt, config.task_seed, guidance);
    auto generator = factory(config.schedule, task);
    SearchConfig search = config.search;
    search.root_seed = derive_seed(config.search.root_seed, 2, p, 0);
    SearchEnvironment env{*generator, roster, prompt, derive_seed(config.search.root_seed, 3, p, 0)};
    results[p] = run_search(search, env);
  });

  auto ledger = report::empty_table(report::kLedgerColumns);
  auto trace = report::empty_table(report::kTraceColumns);
  json runs = json::array();
  BudgetLedger total;
  for (std::size_t p = 0; p < count; ++p) {
    const auto& r = *results[p];
    report::append_ledger_row(ledger, p, config.prompts[p], config.search.label(), r.ledger);
    report::append_trace_rows(trace, p, r.trace);
    runs.push_back({{"prompt_index", p}, {"prompt", config.prompts[p]}, {"result", report::to_json(r)}});
    total += r.ledger;
  }

  if (config.wants("json")) {
    const json doc{{"command", "run"},
                   {"schedule", schedule_json(*config.schedule)},
                   {"task", task_json(config)},
                   {"search", report::to_json(config.search)},
                   {"total_ledger", report::to_json(total)},
                   {"runs", std::move(runs)}};
    write_file(config.output_dir / "results.json", dump(doc));
  }
  if (config.wants("csv")) {
    write_file(config.output_dir / "ledger.csv", report::write_csv(ledger));
    write_file(config.output_dir / "trace.csv", report::write_csv(trace));
  }
  log << "run: " << count << " prompt(s), " << config.search.label() << ", " << total.nfes
      << " NFEs, " << total.images_verified << " images -> " << config.output_dir.string() << "\n";
  return 0;
}

int cmd_scaling(const RunConfig& config, std::ostream& log) {
  prepare_output(config);
  auto roster = build_roster(config);
  const auto setup = experiment(config, roster);
  std::vector<std::string> ids = config.scaling.verifiers;
  if (ids.empty()) {
    for (const auto& spec : config.verifiers) ids.push_back(spec.id);
  }
  std::vector<std::uint32_t> ks = config.scaling.ks;
  if (ks.empty()) ks = log_spaced(1, config.scaling.samples, 12);

  const auto curves = budget_scaling(setup, ids, config.scaling.samples, ks,
                                     config.scaling.repeats, config.search.temperature);

  if (config.wants("csv")) {
    write_file(config.output_dir / "scaling_curve.csv",
               report::write_csv(report::scaling_table(curves)));
    write_file(config.output_dir / "scaling_fit.csv", report::write_csv(report::fit_table(curves)));
  }
  if (config.wants("svg")) {
    write_file(config.output_dir / "scaling_curve.svg",
               report::scaling_svg(curves, "expected best-of-k score"));
  }
  if (config.wants("json")) {
    json list = json::array();
    for (const auto& c : curves) list.push_back(report::to_json(c));
    const json doc{{"command", "scaling"},
                   {"schedule", schedule_json(*config.schedule)},
                   {"task", task_json(config)},
                   {"samples", config.scaling.samples},
                   {"repeats", config.scaling.repeats},
                   {"temperature", config.search.temperature},
                   {"prompts", config.prompts.size()},
                   {"curves", std::move(list)}};
    write_file(config.output_dir / "scaling.json", dump(doc));
  }
  for (const auto& c : curves) {
    log << "scaling: " << c.verifier_id << " alpha=" << report::format_number(c.fit.alpha)
        << " beta=" << report::format_number(c.fit.beta)
        << " r2=" << report::format_number(c.fit.r_squared) << "\n";
  }
  return 0;
}

int cmd_bench(const RunConfig& config, std::ostream& log) {
  if (config.bench.grid.empty()) throw ConfigError("bench.grid is empty");
  prepare_output(config);
  auto roster = build_roster(config);
  const auto setup = experiment(config, roster);

  std::vector<double> temperatures = config.bench.temperatures;
  if (temperatures.empty()) temperatures.push_back(config.search.temperature);

  std::vector<ComparisonReport> reports;
  for (const double tau : temperatures) {
    std::vector<SearchConfig> grid = config.bench.grid;
    for (auto& g : grid) g.temperature = tau;
    auto rep = compare_strategies(grid, setup, config.bench.selections, config.bench.eval_metrics,
                                  config.bench.trials);
    rep.temperature = tau;
    reports.push_back(std::move(rep));
    log << "bench: temperature " << report::format_number(tau) << " done ("
        << reports.back().rows.size() << " rows x " << config.bench.trials << " trials)\n";
  }

  // Wall-clock cost of each verifier on a fixed sample of decoded images.
  auto costs = report::empty_table(report::kCostColumns);
  json cost_list = json::array();
  {
    const auto trial = setup.trial(0);
    auto generator = setup.make_generator(config.schedule, trial.task);
    GenerationSession session(*generator, nullptr);
    const auto root = session.root(trial.root_seed);
    std::vector<Artifact> samples;
    for (std::uint32_t i = 0; i < 16; ++i) {
      samples.push_back(session.decode(session.rollout(root, i, config.search.temperature)));
    }
    for (const auto& spec : config.verifiers) {
      auto& verifier = roster.at(spec.id);
      const auto profile = cost_profile(verifier, samples, trial.task.prompt, config.bench.cost_calls);
      const std::string kind(config.remote_verifier.empty() ? to_string(spec.kind) : "remote");
      report::append_cost_row(costs, profile, kind);
      cost_list.push_back(report::to_json(profile));
    }
  }

  if (config.wants("csv")) {
    auto long_form = report::empty_table(report::kBenchColumns);
    for (const auto& r : reports) report::append_bench_rows(long_form, r);
    write_file(config.output_dir / "bench.csv", report::write_csv(long_form));
    write_file(config.output_dir / "bench_matrix.csv",
               report::write_csv(report::bench_matrix(reports)));
    write_file(config.output_dir / "verifier_costs.csv", report::write_csv(costs));
  }
  if (config.wants("json")) {
    json blocks = json::array();
    for (const auto& r : reports) blocks.push_back(report::to_json(r));
    const json doc{{"command", "bench"},
                   {"schedule", schedule_json(*config.schedule)},
                   {"task", task_json(config)},
                   {"blocks", std::move(blocks)}};
    write_file(config.output_dir / "bench.json", dump(doc));
    write_file(config.output_dir / "verifier_costs.json", dump(cost_list));
  }
  return 0;
}

int run_command(const std::string& command, const fs::path& config_path,
                const CommandOverrides& overrides, std::ostream& log, std::ostream& err) {
  try {
    auto config = load_run_config(config_path);
    apply_overrides(config, overrides);
    if (command == "run") return cmd_run(config, log);
    if (command == "scaling") return cmd_scaling(config, log);
    if (command == "bench") return cmd_bench(config, log);
    throw ConfigError("unknown command '" + command + "'");
  } catch (const ConfigError& e) {
    err << "scalesearch: config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "scalesearch: error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace scalesearch
