// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scalesearch/core.hpp"
#include "scalesearch/ledger.hpp"

namespace scalesearch {

class PrefixCache;

/// Decoded stand-in for an image: the token sequence plus its two latent
/// quality axes, each a scale-weighted match fraction in [0, 1].
struct Artifact {
  std::vector<Token> tokens;
  double alignment = 0.0;
  double quality = 0.0;
  /// Encoded image from a real remote backend; empty for synthetic decodes.
  std::string image_b64;
};

/// Desk-scale text-conditioned task. The alignment target depends on the
/// prompt; the style target depends only on the task seed.
///
/// Target recipe (per scale k, position i, both 0-based position):
///   alignment base  = mix64(task_seed + kGolden) ^ fnv1a(prompt)
///   T[k][i]         = SplitMix64(derive_seed(alignment base, k, 0, i)).next_below(V)
///   U[k][i]         = SplitMix64(derive_seed(task_seed,      k, 1, i)).next_below(V)
struct PlantedTask {
  std::string prompt;
  Seed task_seed = 0;
  /// Planted logit per scale (index k-1). Values must be >= 0.
  std::vector<double> guidance;
  std::vector<TokenMap> alignment_target;
  std::vector<TokenMap> style_target;

  static PlantedTask make(const ScaleSchedule& schedule, std::string prompt, Seed task_seed,
                          double guidance);
  static PlantedTask make(const ScaleSchedule& schedule, std::string prompt, Seed task_seed,
                          std::vector<double> guidance_per_scale);

  double guidance_at(std::size_t scale) const { return guidance.at(scale - 1); }
};

/// P(planted token) for one position: e^{g/τ} / (e^{g/τ} + V - 1), evaluated
/// as 1 / (1 + (V - 1) e^{-g/τ}).
double target_probability(double guidance, double temperature, std::uint32_t vocab_size);

/// Samples scale `scale`'s tokens. Position i draws from
/// SplitMix64(derive_seed(seed, scale, 0, i)): the first unit draw u keeps the
/// target when u < target_probability(...); otherwise the second draw picks
/// j = next_below(V - 1) and emits j, skipping over the target id.
TokenMap sample_scale(const ScaleSchedule& schedule, const TokenMap& target, std::size_t scale,
                      Seed seed, double guidance, double temperature);

/// Σ_k ω_k · matches_k / n_k with ω_k = n_k / total_tokens.
double weighted_match(const ScaleSchedule& schedule, std::span<const TokenMap> scales,
                      std::span<const TokenMap> target);

/// Alignment and quality of a complete sequence. Throws std::invalid_argument
/// for an incomplete sequence.
Artifact decode(const SequenceState& sequence, const PlantedTask& task);

/// Scale-wise generator. forward() is one raw forward pass (one NFE) and is
/// pure in its inputs; decode() is pure and costs nothing. Accounting and
/// caching live in GenerationSession, not here.
class Generator {
 public:
  virtual ~Generator() = default;
  virtual const SchedulePtr& schedule() const = 0;
  virtual TokenMap forward(const SequenceState& prefix, Seed seed, double temperature) = 0;
  virtual Artifact decode(const SequenceState& sequence) = 0;
};

class SyntheticGenerator final : public Generator {
 public:
  SyntheticGenerator(SchedulePtr schedule, PlantedTask task);

  const SchedulePtr& schedule() const override { return schedule_; }
  const PlantedTask& task() const noexcept { return task_; }
  TokenMap forward(const SequenceState& prefix, Seed seed, double temperature) override;
  Artifact decode(const SequenceState& sequence) override;

 private:
  SchedulePtr schedule_;
  PlantedTask task_;
};

/// Accounted access to a generator for one run. Owns the run's ledger; the
/// cache is optional and only ever changes hit/miss counts and NFEs.
class GenerationSession {
 public:
  GenerationSession(Generator& generator, PrefixCache* cache);

  const ScaleSchedule& schedule() const { return *generator_.schedule(); }
  SequenceState root(Seed root_seed) const;

  /// Tokens for scale depth()+1. One NFE on a cache miss, zero on a hit of the
  /// same (prefix lineage, seed, temperature). Throws std::invalid_argument if
  /// the prefix is complete or temperature <= 0.
  TokenMap step(const SequenceState& prefix, Seed seed, double temperature);

  /// step() with the lineage-derived seed for `branch`, appended to prefix.
  SequenceState extend(const SequenceState& prefix, std::uint32_t branch, double temperature);

  /// Completes `prefix`: the first generated scale uses `first_branch`, every
  /// later scale uses branch 0. Costs exactly K - depth NFEs without cache hits;
  /// a complete prefix is returned unchanged.
  SequenceState rollout(const SequenceState& prefix, std::uint32_t first_branch,
                        double temperature);

  /// Rebuilds the sequence a lineage identifies.
  SequenceState replay(const SeedLineage& lineage, double temperature);

  Artifact decode(const SequenceState& sequence) { return generator_.decode(sequence); }

  const BudgetLedger& ledger() const noexcept { return ledger_; }
  BudgetLedger& ledger() noexcept { return ledger_; }
  /// Returns the ledger accumulated since the last call and resets it.
  BudgetLedger take_ledger() noexcept;

 private:
  Generator& generator_;
  PrefixCache* cache_;
  BudgetLedger ledger_;
};

}  // namespace scalesearch
