// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "scalesearch/core.hpp"
#include "scalesearch/generator.hpp"
#include "scalesearch/ledger.hpp"
#include "scalesearch/verifier.hpp"

namespace scalesearch {

enum class Strategy { random, gto, beam, dynamic_gto };

std::string_view to_string(Strategy strategy);
Strategy strategy_from_string(std::string_view name);

struct SearchConfig {
  Strategy strategy = Strategy::random;
  std::uint32_t n = 1;            // random
  std::uint32_t c = 1;            // gto, beam
  std::uint32_t w = 1;            // beam
  std::uint32_t total_slots = 0;  // dynamic_gto
  std::uint32_t pilot_c = 2;      // dynamic_gto
  double temperature = 1.0;
  Seed root_seed = 0;
  SelectionRule selection = SelectionRule::single("clip");
  bool use_cache = true;
  std::size_t cache_capacity = 0;
  /// Keep every verified candidate in SearchResult::all_verified.
  bool retain_all = false;

  static SearchConfig random(std::uint32_t n);
  static SearchConfig gto(std::uint32_t c);
  static SearchConfig beam(std::uint32_t w, std::uint32_t c);
  static SearchConfig dynamic_gto(std::uint32_t total_slots, std::uint32_t pilot_c);

  /// Throws std::invalid_argument if parameters are out of range for the
  /// chosen strategy on a schedule with `num_scales` scales.
  void validate(std::size_t num_scales) const;
  /// e.g. "beam(w=3,c=5)".
  std::string label() const;
};

struct ClosedFormBudget {
  std::uint64_t images = 0;
  std::uint64_t nfes = 0;
};

/// random: n images, n·K NFEs; gto: c·K images, c·K(K+1)/2 NFEs;
/// beam: w·c·K images, w·c·K(K+1)/2 NFEs. Throws for dynamic_gto, whose cost
/// depends on the pilot's allocation.
ClosedFormBudget closed_form_budget(const SearchConfig& config, std::size_t num_scales);

/// What a search needs besides its config: the generator for this prompt,
/// the verifier roster, and the base seed for verifier noise.
struct SearchEnvironment {
  Generator& generator;
  VerifierRoster& verifiers;
  std::string prompt;
  Seed noise_base = 0;
};

/// One selection round. For random search the whole run is a single round
/// with scale 0.
struct StepRecord {
  std::string phase;
  std::size_t scale = 0;
  std::uint32_t slots = 0;
  std::vector<SeedLineage> candidates;
  /// Score of each candidate under the selection rule's primary verifier.
  std::vector<double> scores;
  /// Sample variance of `scores` (0 for fewer than two candidates).
  double variance = 0.0;
  std::vector<SeedLineage> kept;
  BudgetLedger ledger;
};

struct SearchResult {
  SearchConfig config;
  ScoredCandidate best;
  std::vector<ScoredCandidate> all_verified;
  BudgetLedger ledger;
  std::vector<StepRecord> trace;
};

SearchResult random_search(const SearchConfig& config, SearchEnvironment& env);
SearchResult gto(const SearchConfig& config, SearchEnvironment& env);
SearchResult beam(const SearchConfig& config, SearchEnvironment& env);
SearchResult dynamic_gto(const SearchConfig& config, SearchEnvironment& env);

/// Dispatches on config.strategy.
SearchResult run_search(const SearchConfig& config, SearchEnvironment& env);

/// Index of the best candidate under `rule`; ties go to earlier verification.
std::size_t select_best(std::span<ScoredCandidate> verified, const SelectionRule& rule);

/// Splits `total_slots` over steps in proportion to `variances` with the
/// largest-remainder method, at least one slot per step, summing exactly to
/// total_slots. All-zero variances give the uniform split. Requires
/// total_slots >= variances.size().
std::vector<std::uint32_t> allocate_slots(std::span<const double> variances,
                                          std::uint32_t total_slots);

}  // namespace scalesearch
