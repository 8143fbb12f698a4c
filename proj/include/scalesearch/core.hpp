// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "scalesearch/seed.hpp"

namespace scalesearch {

using Token = std::uint32_t;

/// The generation grid: K scales, a token count per scale, and a vocabulary.
/// Scale indices are 1-based throughout the library.
class ScaleSchedule {
 public:
  ScaleSchedule(std::vector<std::uint32_t> tokens_per_scale, std::uint32_t vocab_size);

  /// K=13, tokens_per_scale[k] = k (91 tokens), V=16.
  static ScaleSchedule desk_default();
  /// K=3, one token per scale, V=3. Small enough to enumerate (27 sequences).
  static ScaleSchedule tiny();

  std::size_t num_scales() const noexcept { return tokens_per_scale_.size(); }
  std::uint32_t vocab_size() const noexcept { return vocab_size_; }
  std::uint32_t tokens_at(std::size_t scale) const;
  std::span<const std::uint32_t> tokens_per_scale() const noexcept { return tokens_per_scale_; }
  std::uint64_t total_tokens() const noexcept { return total_tokens_; }

  /// Stable identifier used in prefix-cache keys.
  std::uint64_t fingerprint() const noexcept { return fingerprint_; }

  friend bool operator==(const ScaleSchedule& a, const ScaleSchedule& b) noexcept {
    return a.vocab_size_ == b.vocab_size_ && a.tokens_per_scale_ == b.tokens_per_scale_;
  }

 private:
  std::vector<std::uint32_t> tokens_per_scale_;
  std::uint32_t vocab_size_;
  std::uint64_t total_tokens_ = 0;
  std::uint64_t fingerprint_ = 0;
};

using SchedulePtr = std::shared_ptr<const ScaleSchedule>;

/// All tokens of one scale.
struct TokenMap {
  std::size_t scale_index = 0;
  std::vector<Token> tokens;

  friend bool operator==(const TokenMap&, const TokenMap&) = default;
};

/// Root seed plus one branch index per generated scale. The per-scale step
/// seed is chained: seed_k = derive_seed(seed_{k-1}, k, branch_k, 0) with
/// seed_0 = root.
class SeedLineage {
 public:
  SeedLineage() = default;
  explicit SeedLineage(Seed root) : root_(root) {}
  /// Rebuilds a lineage from its root and branch path.
  SeedLineage(Seed root, std::span<const std::uint32_t> branches);

  Seed root() const noexcept { return root_; }
  std::size_t depth() const noexcept { return branches_.size(); }
  std::span<const std::uint32_t> branches() const noexcept { return branches_; }
  std::span<const Seed> seeds() const noexcept { return seeds_; }

  /// Seed of the deepest scale, or the root when empty.
  Seed tip() const noexcept { return seeds_.empty() ? root_ : seeds_.back(); }
  /// The step seed a child on `branch` would receive.
  Seed child_seed(std::uint32_t branch) const noexcept;

  SeedLineage extended(std::uint32_t branch) const;
  SeedLineage truncated(std::size_t depth) const;

  std::uint64_t hash() const noexcept;

  friend bool operator==(const SeedLineage& a, const SeedLineage& b) noexcept {
    return a.root_ == b.root_ && a.branches_ == b.branches_;
  }

 private:
  Seed root_ = 0;
  std::vector<std::uint32_t> branches_;
  std::vector<Seed> seeds_;
};

/// "<root>/<b1>/<b2>/...", as used in CSV traces and diagnostics.
std::string to_string(const SeedLineage& lineage);

/// A prefix (m < K scales) or a complete token sequence.
class SequenceState {
 public:
  SequenceState(SchedulePtr schedule, Seed root_seed);

  const ScaleSchedule& schedule() const noexcept { return *schedule_; }
  const SchedulePtr& schedule_ptr() const noexcept { return schedule_; }
  std::size_t depth() const noexcept { return scales_.size(); }
  bool complete() const noexcept { return scales_.size() == schedule_->num_scales(); }
  std::span<const TokenMap> scales() const noexcept { return scales_; }
  const SeedLineage& lineage() const noexcept { return lineage_; }

  /// Appends the next scale. `tokens.scale_index` must equal depth() + 1.
  SequenceState extended(TokenMap tokens, std::uint32_t branch) const;
  /// The first `depth` scales with the matching lineage prefix.
  SequenceState truncated(std::size_t depth) const;

  /// All tokens in scale order.
  std::vector<Token> flat_tokens() const;

  friend bool operator==(const SequenceState& a, const SequenceState& b) noexcept {
    return *a.schedule_ == *b.schedule_ && a.lineage_ == b.lineage_ && a.scales_ == b.scales_;
  }

 private:
  SchedulePtr schedule_;
  std::vector<TokenMap> scales_;
  SeedLineage lineage_;
};

}  // namespace scalesearch
