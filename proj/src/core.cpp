// SPDX-License-Identifier: Apache-2.0
#include "scalesearch/core.hpp"

#include <stdexcept>
#include <utility>

#include "scalesearch/ledger.hpp"

namespace scalesearch {

ScaleSchedule::ScaleSchedule(std::vector<std::uint32_t> tokens_per_scale,
                             std::uint32_t vocab_size)
    : tokens_per_scale_(std::move(tokens_per_scale)), vocab_size_(vocab_size) {
  if (tokens_per_scale_.empty()) {
    throw std::invalid_argument("schedule needs at least one scale");
  }
  if (vocab_size_ < 2) {
    throw std::invalid_argument("vocab_size must be >= 2");
  }
  std::uint64_t h = fnv1a(std::span<const std::uint32_t>(tokens_per_scale_));
  for (const auto n : tokens_per_scale_) {
    if (n == 0) {
      throw std::invalid_argument("every scale needs at least one token");
    }
    total_tokens_ += n;
  }
  fingerprint_ = mix64(h ^ (static_cast<std::uint64_t>(vocab_size_) * kGolden));
}

ScaleSchedule ScaleSchedule::desk_default() {
  std::vector<std::uint32_t> sizes(13);
  for (std::uint32_t k = 0; k < sizes.size(); ++k) sizes[k] = k + 1;
  return ScaleSchedule(std::move(sizes), 16);
}

ScaleSchedule ScaleSchedule::tiny() { return ScaleSchedule({1, 1, 1}, 3); }

std::uint32_t ScaleSchedule::tokens_at(std::size_t scale) const {
  if (scale < 1 || scale > tokens_per_scale_.size()) {
    throw std::out_of_range("scale index " + std::to_string(scale) + " outside [1, " +
                            std::to_string(tokens_per_scale_.size()) + "]");
  }
  return tokens_per_scale_[scale - 1];
}

SeedLineage::SeedLineage(Seed root, std::span<const std::uint32_t> branches) : root_(root) {
  branches_.reserve(branches.size());
  seeds_.reserve(branches.size());
  for (const auto b : branches) {
    seeds_.push_back(child_seed(b));
    branches_.push_back(b);
  }
}

Seed SeedLineage::child_seed(std::uint32_t branch) const noexcept {
  return derive_seed(tip(), branches_.size() + 1, branch, 0);
}

SeedLineage SeedLineage::extended(std::uint32_t branch) const {
  SeedLineage out = *this;
  out.seeds_.push_back(child_seed(branch));
  out.branches_.push_back(branch);
  return out;
}

SeedLineage SeedLineage::truncated(std::size_t depth) const {
  if (depth > branches_.size()) {
    throw std::out_of_range("cannot truncate lineage to a greater depth");
  }
  SeedLineage out(root_);
  out.branches_.assign(branches_.begin(), branches_.begin() + static_cast<std::ptrdiff_t>(depth));
  out.seeds_.assign(seeds_.begin(), seeds_.begin() + static_cast<std::ptrdiff_t>(depth));
  return out;
}

std::uint64_t SeedLineage::hash() const noexcept {
  return mix64(tip() ^ (branches_.size() * kGolden));
}

std::string to_string(const SeedLineage& lineage) {
  std::string out = std::to_string(lineage.root());
  for (const auto b : lineage.branches()) {
    out += '/';
    out += std::to_string(b);
  }
  return out;
}

SequenceState::SequenceState(SchedulePtr schedule, Seed root_seed)
    : schedule_(std::move(schedule)), lineage_(root_seed) {
  if (!schedule_) throw std::invalid_argument("sequence requires a schedule");
}

SequenceState SequenceState::extended(TokenMap tokens, std::uint32_t branch) const {
  if (complete()) throw std::logic_error("sequence is already complete");
  const std::size_t next = depth() + 1;
  if (tokens.scale_index != next) {
    throw std::invalid_argument("token map for scale " + std::to_string(tokens.scale_index) +
                                " cannot extend a prefix of depth " + std::to_string(depth()));
  }
  if (tokens.tokens.size() != schedule_->tokens_at(next)) {
    throw std::invalid_argument("token map size does not match the schedule");
  }
  for (const auto t : tokens.tokens) {
    if (t >= schedule_->vocab_size()) throw std::invalid_argument("token id out of vocabulary");
  }
  SequenceState out = *this;
  out.scales_.push_back(std::move(tokens));
  out.lineage_ = lineage_.extended(branch);
  return out;
}

SequenceState SequenceState::truncated(std::size_t depth) const {
  if (depth > scales_.size()) throw std::out_of_range("cannot truncate to a greater depth");
  SequenceState out(schedule_, lineage_.root());
  out.scales_.assign(scales_.begin(), scales_.begin() + static_cast<std::ptrdiff_t>(depth));
  out.lineage_ = lineage_.truncated(depth);
  return out;
}

std::vector<Token> SequenceState::flat_tokens() const {
  std::vector<Token> out;
  out.reserve(schedule_->total_tokens());
  for (const auto& s : scales_) out.insert(out.end(), s.tokens.begin(), s.tokens.end());
  return out;
}

// ---------------------------------------------------------------------------
// BudgetLedger

namespace {

void checked_add(std::uint64_t& into, std::uint64_t value, const char* field) {
  if (into > UINT64_MAX - value) {
    throw std::overflow_error(std::string("budget counter overflow: ") + field);
  }
  into += value;
}

}  // namespace

void BudgetLedger::record_forward_pass() {
  checked_add(nfes, 1, "nfes");
  checked_add(cache_misses, 1, "cache_misses");
}

void BudgetLedger::record_cache_hit() { checked_add(cache_hits, 1, "cache_hits"); }

void BudgetLedger::record_image(std::uint64_t calls) {
  checked_add(images_verified, 1, "images_verified");
  checked_add(verifier_calls, calls, "verifier_calls");
}

BudgetLedger& BudgetLedger::operator+=(const BudgetLedger& other) {
  BudgetLedger sum = *this;
  checked_add(sum.nfes, other.nfes, "nfes");
  checked_add(sum.images_verified, other.images_verified, "images_verified");
  checked_add(sum.verifier_calls, other.verifier_calls, "verifier_calls");
  checked_add(sum.cache_hits, other.cache_hits, "cache_hits");
  checked_add(sum.cache_misses, other.cache_misses, "cache_misses");
  *this = sum;
  return *this;
}

BudgetLedger ledger_merge(const BudgetLedger& a, const BudgetLedger& b) {
  BudgetLedger out = a;
  out += b;
  return out;
}

}  // namespace scalesearch
