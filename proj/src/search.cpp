// SPDX-License-Identifier: Apache-2.0
#include "scalesearch/search.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <utility>

#include "scalesearch/prefix_cache.hpp"

namespace scalesearch {

std::string_view to_string(Strategy strategy) {
  switch (strategy) {
    case Strategy::random: return "random";
    case Strategy::gto: return "gto";
    case Strategy::beam: return "beam";
    case Strategy::dynamic_gto: return "dynamic_gto";
  }
  return "unknown";
}

Strategy strategy_from_string(std::string_view name) {
  if (name == "random") return Strategy::random;
  if (name == "gto") return Strategy::gto;
  if (name == "beam") return Strategy::beam;
  if (name == "dynamic_gto") return Strategy::dynamic_gto;
  throw std::invalid_argument("unknown strategy '" + std::string(name) + "'");
}

SearchConfig SearchConfig::random(std::uint32_t n) {
  SearchConfig cfg;
  cfg.strategy = Strategy::random;
  cfg.n = n;
  return cfg;
}

SearchConfig SearchConfig::gto(std::uint32_t c) {
  SearchConfig cfg;
  cfg.strategy = Strategy::gto;
  cfg.c = c;
  return cfg;
}

SearchConfig SearchConfig::beam(std::uint32_t w, std::uint32_t c) {
  SearchConfig cfg;
  cfg.strategy = Strategy::beam;
  cfg.w = w;
  cfg.c = c;
  return cfg;
}

SearchConfig SearchConfig::dynamic_gto(std::uint32_t total_slots, std::uint32_t pilot_c) {
  SearchConfig cfg;
  cfg.strategy = Strategy::dynamic_gto;
  cfg.total_slots = total_slots;
  cfg.pilot_c = pilot_c;
  return cfg;
}

void SearchConfig::validate(std::size_t num_scales) const {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw std::invalid_argument("temperature must be > 0");
  }
  if (selection.verifiers.empty()) throw std::invalid_argument("selection rule names no verifier");
  switch (strategy) {
    case Strategy::random:
      if (n < 1) throw std::invalid_argument("random search needs n >= 1");
      break;
    case Strategy::gto:
      if (c < 1) throw std::invalid_argument("gto needs c >= 1");
      break;
    case Strategy::beam:
      if (w < 1 || c < 1) throw std::invalid_argument("beam needs w >= 1 and c >= 1");
      break;
    case Strategy::dynamic_gto:
      if (total_slots < num_scales) {
        throw std::invalid_argument("dynamic_gto needs total_slots >= number of scales");
      }
      if (pilot_c < 2) throw std::invalid_argument("dynamic_gto needs pilot_c >= 2");
      break;
  }
}

std::string SearchConfig::label() const {
  switch (strategy) {
    case Strategy::random: return "random(n=" + std::to_string(n) + ")";
    case Strategy::gto: return "gto(c=" + std::to_string(c) + ")";
    case Strategy::beam:
      return "beam(w=" + std::to_string(w) + ",c=" + std::to_string(c) + ")";
    case Strategy::dynamic_gto:
      return "dynamic_gto(slots=" + std::to_string(total_slots) +
             ",pilot_c=" + std::to_string(pilot_c) + ")";
  }
  return "unknown";
}

ClosedFormBudget closed_form_budget(const SearchConfig& config, std::size_t num_scales) {
  const std::uint64_t k = num_scales;
  const std::uint64_t triangle = k * (k + 1) / 2;
  switch (config.strategy) {
    case Strategy::random: return {config.n, std::uint64_t{config.n} * k};
    case Strategy::gto: return {std::uint64_t{config.c} * k, std::uint64_t{config.c} * triangle};
    case Strategy::beam: {
      const std::uint64_t wc = std::uint64_t{config.w} * config.c;
      return {wc * k, wc * triangle};
    }
    case Strategy::dynamic_gto: break;
  }
  throw std::invalid_argument("dynamic_gto has no closed-form budget");
}

std::size_t select_best(std::span<ScoredCandidate> verified, const SelectionRule& rule) {
  if (verified.empty()) throw std::invalid_argument("select_best on an empty list");
  return rank_order(verified, rule).front();
}

std::vector<std::uint32_t> allocate_slots(std::span<const double> variances,
                                          std::uint32_t total_slots) {
  const std::size_t steps = variances.size();
  if (steps == 0) throw std::invalid_argument("allocate_slots needs at least one step");
  if (total_slots < steps) throw std::invalid_argument("fewer slots than steps");

  double sum = 0.0;
  for (const double v : variances) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("variance must be >= 0");
    sum += v;
  }
  std::vector<double> quota(steps);
  for (std::size_t k = 0; k < steps; ++k) {
    quota[k] = sum > 0.0 ? total_slots * variances[k] / sum
                         : static_cast<double>(total_slots) / static_cast<double>(steps);
  }

  std::vector<std::uint32_t> alloc(steps);
  std::int64_t assigned = 0;
  for (std::size_t k = 0; k < steps; ++k) {
    alloc[k] = std::max<std::uint32_t>(1, static_cast<std::uint32_t>(std::floor(quota[k])));
    assigned += alloc[k];
  }
  std::int64_t diff = static_cast<std::int64_t>(total_slots) - assigned;

  std::vector<std::size_t> order(steps);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (diff > 0) {
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return quota[a] - std::floor(quota[a]) > quota[b] - std::floor(quota[b]);
    });
    for (std::size_t i = 0; diff > 0; i = (i + 1) % steps, --diff) ++alloc[order[i]];
  } else if (diff < 0) {
    // Steps pushed up to the one-slot floor leave a deficit; take it back from
    // the most over-allocated steps that can spare a slot.
    while (diff < 0) {
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return alloc[a] - quota[a] > alloc[b] - quota[b];
      });
      for (const std::size_t k : order) {
        if (alloc[k] > 1) {
          --alloc[k];
          ++diff;
          break;
        }
      }
    }
  }
  return alloc;
}

namespace {

/// Shared machinery for one search run: accounted generation, scoring and
/// the running list of every verified candidate.
class Run {
 public:
  Run(const SearchConfig& config, SearchEnvironment& env)
      : config_(config),
        env_(env),
        cache_(config.use_cache ? std::make_unique<PrefixCache>(config.cache_capacity) : nullptr),
        session_(env.generator, cache_.get()) {
    config.validate(session_.schedule().num_scales());
    for (const auto& id : config.selection.verifiers) {
      if (!env.verifiers.contains(id)) {
        throw std::invalid_argument("selection references unknown verifier '" + id + "'");
      }
    }
  }

  GenerationSession& session() { return session_; }
  std::size_t num_scales() const { return session_.schedule().num_scales(); }
  double temperature() const { return config_.temperature; }

  ScoredCandidate verify(SequenceState sequence) {
    ScoredCandidate cand{std::move(sequence), {}, {}, std::nullopt, verified_.size()};
    cand.artifact = session_.decode(cand.sequence);
    for (const auto& id : config_.selection.verifiers) {
      if (cand.scores.contains(id)) continue;
      auto& verifier = env_.verifiers.at(id);
      cand.scores[id] =
          verifier.score(cand.artifact, env_.prompt, noise_seed(cand.artifact.tokens, id, env_.noise_base));
    }
    session_.ledger().record_image(cand.scores.size());
    verified_.push_back(cand);
    return cand;
  }

  /// Ranks one round's candidates, records the round, and returns the
  /// best-first order.
  std::vector<std::size_t> close_round(std::string phase, std::size_t scale,
                                       std::vector<ScoredCandidate>& round, std::size_t keep) {
    auto order = rank_order(round, config_.selection);
    StepRecord rec;
    rec.phase = std::move(phase);
    rec.scale = scale;
    rec.slots = static_cast<std::uint32_t>(round.size());
    const auto& primary = config_.selection.primary();
    for (const auto& c : round) {
      rec.candidates.push_back(c.sequence.lineage());
      rec.scores.push_back(c.score_of(primary));
    }
    rec.variance = sample_variance(rec.scores);
    for (std::size_t i = 0; i < std::min(keep, order.size()); ++i) {
      const auto& lineage = round[order[i]].sequence.lineage();
      rec.kept.push_back(scale == 0 ? lineage : lineage.truncated(scale));
    }
    rec.ledger = session_.take_ledger();
    total_ += rec.ledger;
    trace_.push_back(std::move(rec));
    return order;
  }

  SearchResult finish() {
    const auto best = select_best(verified_, config_.selection);
    SearchResult result{config_, verified_[best], {}, total_, {}};
    result.trace = std::move(trace_);
    if (config_.retain_all) result.all_verified = std::move(verified_);
    return result;
  }

  double trace_variance(std::size_t round) const { return trace_.at(round).variance; }

  static double sample_variance(std::span<const double> xs) {
    if (xs.size() < 2) return 0.0;
    const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    double ss = 0.0;
    for (const double x : xs) ss += (x - mean) * (x - mean);
    return ss / static_cast<double>(xs.size() - 1);
  }

 private:
  const SearchConfig& config_;
  SearchEnvironment& env_;
  std::unique_ptr<PrefixCache> cache_;
  GenerationSession session_;
  std::vector<ScoredCandidate> verified_;
  std::vector<StepRecord> trace_;
  BudgetLedger total_;
};

// Candidate j at a step extends its parent on branch j + 1; rollouts continue
// on branch 0, so no candidate ever repeats a forward pass of another.
constexpr std::uint32_t candidate_branch(std::uint32_t j) { return j + 1; }

/// Greedy token optimization with per-step candidate counts.
void run_gto(Run& run, Seed root_seed, std::span<const std::uint32_t> per_step,
             const std::string& phase) {
  auto& session = run.session();
  SequenceState prefix = session.root(root_seed);
  for (std::size_t k = 1; k <= run.num_scales(); ++k) {
    std::vector<ScoredCandidate> round;
    for (std::uint32_t j = 0; j < per_step[k - 1]; ++j) {
      round.push_back(run.verify(session.rollout(prefix, candidate_branch(j), run.temperature())));
    }
    const auto order = run.close_round(phase, k, round, 1);
    prefix = round[order.front()].sequence.truncated(k);
  }
}

}  // namespace

SearchResult random_search(const SearchConfig& config, SearchEnvironment& env) {
  Run run(config, env);
  auto& session = run.session();
  const SequenceState root = session.root(config.root_seed);
  std::vector<ScoredCandidate> round;
  round.reserve(config.n);
  for (std::uint32_t i = 0; i < config.n; ++i) {
    round.push_back(run.verify(session.rollout(root, i, config.temperature)));
  }
  run.close_round("random", 0, round, 1);
  return run.finish();
}

SearchResult gto(const SearchConfig& config, SearchEnvironment& env) {
  Run run(config, env);
  const std::vector<std::uint32_t> per_step(run.num_scales(), config.c);
  run_gto(run, config.root_seed, per_step, "gto");
  return run.finish();
}

SearchResult beam(const SearchConfig& config, SearchEnvironment& env) {
  Run run(config, env);
  auto& session = run.session();
  std::vector<SequenceState> beams{session.root(config.root_seed)};
  for (std::size_t k = 1; k <= run.num_scales(); ++k) {
    // The empty root is the only prefix at step 1, so it takes all w·c slots.
    const std::uint32_t per_beam = k == 1 ? config.w * config.c : config.c;
    std::vector<ScoredCandidate> round;
    for (const auto& prefix : beams) {
      for (std::uint32_t j = 0; j < per_beam; ++j) {
        round.push_back(
            run.verify(session.rollout(prefix, candidate_branch(j), config.temperature)));
      }
    }
    const auto order = run.close_round("beam", k, round, config.w);
    beams.clear();
    for (std::size_t i = 0; i < std::min<std::size_t>(config.w, order.size()); ++i) {
      beams.push_back(round[order[i]].sequence.truncated(k));
    }
  }
  return run.finish();
}

SearchResult dynamic_gto(const SearchConfig& config, SearchEnvironment& env) {
  Run run(config, env);
  const std::size_t steps = run.num_scales();

  const std::vector<std::uint32_t> pilot(steps, config.pilot_c);
  run_gto(run, config.root_seed, pilot, "pilot");

  std::vector<double> variances;
  variances.reserve(steps);
  for (std::size_t k = 0; k < steps; ++k) variances.push_back(run.trace_variance(k));
  const auto slots = allocate_slots(variances, config.total_slots);

  // The allocated phase draws from a separate root so it never replays the
  // pilot's forward passes.
  run_gto(run, derive_seed(config.root_seed, 1, 0, 1), slots, "allocated");
  return run.finish();
}

SearchResult run_search(const SearchConfig& config, SearchEnvironment& env) {
  switch (config.strategy) {
    case Strategy::random: return random_search(config, env);
    case Strategy::gto: return gto(config, env);
    case Strategy::beam: return beam(config, env);
    case Strategy::dynamic_gto: return dynamic_gto(config, env);
  }
  throw std::invalid_argument("unknown strategy");
}

}  // namespace scalesearch
