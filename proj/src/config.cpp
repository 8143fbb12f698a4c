// SPDX-License-Identifier: Apache-2.0
#include "scalesearch/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace scalesearch {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::set<std::string> kFormats{"json", "csv", "svg"};

[[noreturn]] void fail(const std::string& message) { throw ConfigError(message); }

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(std::string("field '") + key + "': " + e.what());
  }
}

void expect_object(const json& j, const std::string& what) {
  if (!j.is_object()) fail(what + " must be a JSON object");
}

void reject_unknown(const json& j, std::initializer_list<std::string_view> known,
                    const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      fail("unknown field '" + key + "' in " + where);
    }
  }
}

std::uint32_t positive(const json& j, const char* key, std::uint32_t fallback) {
  const auto v = get_or<std::int64_t>(j, key, fallback);
  if (v < 0 || v > static_cast<std::int64_t>(UINT32_MAX)) {
    fail(std::string("field '") + key + "' is out of range");
  }
  return static_cast<std::uint32_t>(v);
}

SchedulePtr parse_schedule(const json& j) {
  try {
    if (j.is_null()) return std::make_shared<const ScaleSchedule>(ScaleSchedule::desk_default());
    if (j.is_string()) {
      const auto name = j.get<std::string>();
      if (name == "desk") return std::make_shared<const ScaleSchedule>(ScaleSchedule::desk_default());
      if (name == "tiny") return std::make_shared<const ScaleSchedule>(ScaleSchedule::tiny());
      fail("unknown schedule preset '" + name + "' (expected desk or tiny)");
    }
    expect_object(j, "schedule");
    reject_unknown(j, {"tokens_per_scale", "vocab_size"}, "schedule");
    if (!j.contains("tokens_per_scale")) fail("schedule needs tokens_per_scale");
    return std::make_shared<const ScaleSchedule>(
        j.at("tokens_per_scale").get<std::vector<std::uint32_t>>(),
        get_or<std::uint32_t>(j, "vocab_size", 16));
  } catch (const json::exception& e) {
    fail(std::string("schedule: ") + e.what());
  } catch (const std::invalid_argument& e) {
    fail(std::string("schedule: ") + e.what());
  }
}

std::vector<double> parse_guidance(const json& j, std::size_t num_scales) {
  std::vector<double> g;
  if (j.is_number()) {
    g = {j.get<double>()};
  } else if (j.is_array()) {
    g = j.get<std::vector<double>>();
  } else {
    fail("task.guidance must be a number or an array");
  }
  if (g.size() != 1 && g.size() != num_scales) {
    fail("task.guidance needs 1 or " + std::to_string(num_scales) + " values, got " +
         std::to_string(g.size()));
  }
  for (const double v : g) {
    if (!(v >= 0.0)) fail("task.guidance values must be >= 0");
  }
  return g;
}

std::vector<std::uint32_t> parse_ks(const json& j) {
  try {
    return j.get<std::vector<std::uint32_t>>();
  } catch (const json::exception& e) {
    fail(std::string("scaling.ks: ") + e.what());
  }
}

}  // namespace

bool RunConfig::wants(std::string_view format) const {
  return std::find(formats.begin(), formats.end(), format) != formats.end();
}

std::vector<VerifierSpec> default_verifiers(double noise_sigma) {
  return {VerifierSpec::clip_like(noise_sigma), VerifierSpec::aesthetic_like(noise_sigma),
          VerifierSpec::preference_like(noise_sigma)};
}

std::string expand_env(std::string_view text) {
  std::string out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '$' && i + 1 < text.size() && text[i + 1] == '{') {
      const auto close = text.find('}', i + 2);
      if (close == std::string_view::npos) fail("unterminated ${ in '" + std::string(text) + "'");
      const std::string name(text.substr(i + 2, close - i - 2));
      if (const char* value = std::getenv(name.c_str())) out += value;
      i = close + 1;
    } else {
      out += text[i++];
    }
  }
  return out;
}

std::vector<std::string> read_prompt_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open prompt file '" + path.string() + "'");
  std::vector<std::string> prompts;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (first && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);  // BOM
    first = false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto start = line.find_first_not_of(" \t");
    if (start == std::string::npos || line[start] == '#') continue;
    const auto end = line.find_last_not_of(" \t");
    prompts.push_back(line.substr(start, end - start + 1));
  }
  if (prompts.empty()) fail("prompt file '" + path.string() + "' contains no prompts");
  return prompts;
}

SelectionRule parse_selection(const json& j) {
  if (j.is_string()) return SelectionRule::single(j.get<std::string>());
  expect_object(j, "selection");
  const auto rule = get_or<std::string>(j, "rule", "single");
  if (rule == "single") {
    reject_unknown(j, {"rule", "verifier"}, "selection");
    if (!j.contains("verifier")) fail("single selection needs 'verifier'");
    return SelectionRule::single(get_or<std::string>(j, "verifier", ""));
  }
  if (rule == "ensemble") {
    reject_unknown(j, {"rule", "verifiers", "tiebreak"}, "selection");
    const auto ids = get_or<std::vector<std::string>>(j, "verifiers", {});
    if (ids.empty()) fail("ensemble selection needs a nonempty 'verifiers' list");
    return SelectionRule::ensemble(ids, get_or<std::string>(j, "tiebreak", ids.front()));
  }
  if (rule == "binary") {
    reject_unknown(j, {"rule", "binary", "secondary"}, "selection");
    if (!j.contains("binary") || !j.contains("secondary")) {
      fail("binary selection needs 'binary' and 'secondary'");
    }
    return SelectionRule::binary(get_or<std::string>(j, "binary", ""),
                                 get_or<std::string>(j, "secondary", ""));
  }
  fail("unknown selection rule '" + rule + "'");
}

VerifierSpec parse_verifier(const json& j) {
  VerifierSpec spec;
  if (j.is_string()) {
    const auto name = j.get<std::string>();
    if (name == "clip") return VerifierSpec::clip_like(0.05);
    if (name == "aesthetic") return VerifierSpec::aesthetic_like(0.05);
    if (name == "imagereward") return VerifierSpec::preference_like(0.05);
    if (name == "vlm") return VerifierSpec::binary(0.5);
    fail("unknown verifier preset '" + name + "'");
  }
  expect_object(j, "verifier entry");
  reject_unknown(j, {"id", "kind", "alignment_weight", "quality_weight", "noise_sigma", "threshold"},
                 "verifier entry");
  const auto id = get_or<std::string>(j, "id", "");
  const auto kind_name = get_or<std::string>(j, "kind", "alignment");
  try {
    switch (verifier_kind_from_string(kind_name)) {
      case VerifierKind::alignment: spec = VerifierSpec::clip_like(0.0, id); break;
      case VerifierKind::quality: spec = VerifierSpec::aesthetic_like(0.0, id); break;
      case VerifierKind::preference: spec = VerifierSpec::preference_like(0.0, id); break;
      case VerifierKind::binary: spec = VerifierSpec::binary(0.5, id); break;
      case VerifierKind::remote: spec = VerifierSpec::remote(id); break;
    }
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
  spec.alignment_weight = get_or<double>(j, "alignment_weight", spec.alignment_weight);
  spec.quality_weight = get_or<double>(j, "quality_weight", spec.quality_weight);
  spec.noise_sigma = get_or<double>(j, "noise_sigma", spec.noise_sigma);
  spec.threshold = get_or<double>(j, "threshold", spec.threshold);
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
  return spec;
}

SearchConfig parse_search_config(const json& j, const SearchConfig& defaults) {
  expect_object(j, "search block");
  reject_unknown(j,
                 {"strategy", "n", "c", "w", "total_slots", "pilot_c", "temperature", "seed",
                  "selection", "cache", "cache_capacity", "retain_all"},
                 "search block");
  SearchConfig cfg = defaults;
  try {
    if (j.contains("strategy")) cfg.strategy = strategy_from_string(j.at("strategy").get<std::string>());
  } catch (const std::exception& e) {
    fail(std::string("strategy: ") + e.what());
  }
  cfg.n = positive(j, "n", cfg.n);
  cfg.c = positive(j, "c", cfg.c);
  cfg.w = positive(j, "w", cfg.w);
  cfg.total_slots = positive(j, "total_slots", cfg.total_slots);
  cfg.pilot_c = positive(j, "pilot_c", cfg.pilot_c);
  cfg.temperature = get_or<double>(j, "temperature", cfg.temperature);
  cfg.root_seed = get_or<Seed>(j, "seed", cfg.root_seed);
  if (j.contains("selection")) cfg.selection = parse_selection(j.at("selection"));
  cfg.use_cache = get_or<bool>(j, "cache", cfg.use_cache);
  cfg.cache_capacity = get_or<std::size_t>(j, "cache_capacity", cfg.cache_capacity);
  cfg.retain_all = get_or<bool>(j, "retain_all", cfg.retain_all);
  return cfg;
}

RunConfig parse_run_config(const json& doc, const fs::path& base_dir) {
  expect_object(doc, "config");
  reject_unknown(doc,
                 {"schedule", "task", "prompts", "prompts_file", "search", "verifiers", "output",
                  "remote", "parallel", "scaling", "bench"},
                 "config");
  RunConfig cfg;
  cfg.schedule = parse_schedule(doc.contains("schedule") ? doc.at("schedule") : json());
  const std::size_t K = cfg.schedule->num_scales();

  if (doc.contains("task")) {
    const auto& task = doc.at("task");
    expect_object(task, "task");
    reject_unknown(task, {"seed", "guidance"}, "task");
    cfg.task_seed = get_or<Seed>(task, "seed", 0);
    if (task.contains("guidance")) cfg.guidance = parse_guidance(task.at("guidance"), K);
  }

  if (doc.contains("prompts") && doc.contains("prompts_file")) {
    fail("give either 'prompts' or 'prompts_file', not both");
  }
  if (doc.contains("prompts_file")) {
    fs::path file = get_or<std::string>(doc, "prompts_file", "");
    if (file.is_relative()) file = base_dir / file;
    cfg.prompts = read_prompt_file(file);
  } else if (doc.contains("prompts")) {
    cfg.prompts = get_or<std::vector<std::string>>(doc, "prompts", {});
  } else {
    fail("config needs 'prompts' or 'prompts_file'");
  }
  if (cfg.prompts.empty()) fail("prompt list is empty");

  SearchConfig search_defaults;
  search_defaults.selection = SelectionRule::single("clip");
  cfg.search = doc.contains("search") ? parse_search_config(doc.at("search"), search_defaults)
                                      : search_defaults;

  if (doc.contains("verifiers")) {
    const auto& list = doc.at("verifiers");
    if (!list.is_array() || list.empty()) fail("'verifiers' must be a nonempty array");
    for (const auto& v : list) cfg.verifiers.push_back(parse_verifier(v));
  } else {
    cfg.verifiers = default_verifiers(0.05);
  }
  std::set<std::string> ids;
  for (const auto& v : cfg.verifiers) {
    if (!ids.insert(v.id).second) fail("duplicate verifier id '" + v.id + "'");
  }

  if (doc.contains("output")) {
    const auto& out = doc.at("output");
    expect_object(out, "output");
    reject_unknown(out, {"dir", "formats"}, "output");
    cfg.output_dir = get_or<std::string>(out, "dir", "out");
    cfg.formats = get_or<std::vector<std::string>>(out, "formats", cfg.formats);
    for (const auto& f : cfg.formats) {
      if (!kFormats.contains(f)) fail("unknown output format '" + f + "'");
    }
  }
  if (cfg.output_dir.is_relative()) cfg.output_dir = base_dir / cfg.output_dir;

  if (doc.contains("remote")) {
    const auto& remote = doc.at("remote");
    expect_object(remote, "remote");
    reject_unknown(remote, {"generator", "verifier"}, "remote");
    cfg.remote_generator = expand_env(get_or<std::string>(remote, "generator", ""));
    cfg.remote_verifier = expand_env(get_or<std::string>(remote, "verifier", ""));
  }

  const auto parallel = get_or<std::int64_t>(doc, "parallel", 1);
  if (parallel < 1) fail("'parallel' must be >= 1");
  cfg.parallel = static_cast<std::size_t>(parallel);

  if (doc.contains("scaling")) {
    const auto& s = doc.at("scaling");
    expect_object(s, "scaling");
    reject_unknown(s, {"samples", "ks", "repeats", "verifiers"}, "scaling");
    cfg.scaling.samples = positive(s, "samples", cfg.scaling.samples);
    if (s.contains("ks")) cfg.scaling.ks = parse_ks(s.at("ks"));
    cfg.scaling.repeats = positive(s, "repeats", cfg.scaling.repeats);
    cfg.scaling.verifiers = get_or<std::vector<std::string>>(s, "verifiers", {});
  }
  if (cfg.scaling.samples < 1) fail("scaling.samples must be >= 1");
  if (cfg.scaling.repeats < 1) fail("scaling.repeats must be >= 1");
  for (const auto k : cfg.scaling.ks) {
    if (k < 1 || k > cfg.scaling.samples) {
      fail("scaling.ks contains " + std::to_string(k) + ", outside [1, samples=" +
           std::to_string(cfg.scaling.samples) + "]");
    }
  }
  for (const auto& id : cfg.scaling.verifiers) {
    if (!ids.contains(id)) fail("scaling.verifiers names unknown verifier '" + id + "'");
  }

  if (doc.contains("bench")) {
    const auto& b = doc.at("bench");
    expect_object(b, "bench");
    reject_unknown(b, {"grid", "trials", "selections", "eval_metrics", "temperatures", "cost_calls"},
                   "bench");
    if (b.contains("grid")) {
      if (!b.at("grid").is_array()) fail("bench.grid must be an array");
      for (const auto& entry : b.at("grid")) {
        cfg.bench.grid.push_back(parse_search_config(entry, cfg.search));
      }
    }
    cfg.bench.trials = positive(b, "trials", cfg.bench.trials);
    if (cfg.bench.trials < 1) fail("bench.trials must be >= 1");
    if (b.contains("selections")) {
      if (!b.at("selections").is_array()) fail("bench.selections must be an array");
      for (const auto& s : b.at("selections")) cfg.bench.selections.push_back(parse_selection(s));
    }
    cfg.bench.eval_metrics = get_or<std::vector<std::string>>(b, "eval_metrics", cfg.bench.eval_metrics);
    cfg.bench.temperatures = get_or<std::vector<double>>(b, "temperatures", {});
    cfg.bench.cost_calls = positive(b, "cost_calls", cfg.bench.cost_calls);
    if (cfg.bench.cost_calls < 100) fail("bench.cost_calls must be >= 100");
  }
  for (const double t : cfg.bench.temperatures) {
    if (!(t > 0.0)) fail("bench.temperatures must be > 0");
  }
  for (const auto& m : cfg.bench.eval_metrics) {
    if (m != "alignment" && m != "quality" && !ids.contains(m)) {
      fail("bench.eval_metrics names unknown metric '" + m + "'");
    }
  }

  // Every rule must name known verifiers and every search must fit the schedule.
  auto check_search = [&](const SearchConfig& s, const std::string& where) {
    for (const auto& id : s.selection.verifiers) {
      if (!ids.contains(id)) fail(where + ": selection names unknown verifier '" + id + "'");
    }
    if (s.selection.kind == SelectionRule::Kind::ensemble && !ids.contains(s.selection.tiebreak)) {
      fail(where + ": ensemble tiebreak names unknown verifier '" + s.selection.tiebreak + "'");
    }
    try {
      s.validate(K);
    } catch (const std::invalid_argument& e) {
      fail(where + ": " + e.what());
    }
  };
  check_search(cfg.search, "search");
  for (std::size_t i = 0; i < cfg.bench.grid.size(); ++i) {
    check_search(cfg.bench.grid[i], "bench.grid[" + std::to_string(i) + "]");
  }
  for (const auto& rule : cfg.bench.selections) {
    SearchConfig probe = cfg.search;
    probe.selection = rule;
    check_search(probe, "bench.selections");
  }
  return cfg;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open config file '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  json doc;
  try {
    doc = json::parse(buffer.str());
  } catch (const json::parse_error& e) {
    fail("config file '" + path.string() + "' is not valid JSON: " + e.what());
  }
  auto cfg = parse_run_config(doc, path.parent_path());
  cfg.source = path;
  return cfg;
}

}  // namespace scalesearch
