// SPDX-License-Identifier: Apache-2.0
#include "scalesearch/generator.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "scalesearch/prefix_cache.hpp"

namespace scalesearch {

namespace {

std::vector<TokenMap> make_target(const ScaleSchedule& schedule, Seed base, std::uint64_t branch) {
  std::vector<TokenMap> out;
  out.reserve(schedule.num_scales());
  for (std::size_t k = 1; k <= schedule.num_scales(); ++k) {
    TokenMap map{k, {}};
    const auto n = schedule.tokens_at(k);
    map.tokens.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) {
      SplitMix64 rng(derive_seed(base, k, branch, i));
      map.tokens.push_back(static_cast<Token>(rng.next_below(schedule.vocab_size())));
    }
    out.push_back(std::move(map));
  }
  return out;
}

}  // namespace

PlantedTask PlantedTask::make(const ScaleSchedule& schedule, std::string prompt, Seed task_seed,
                              double guidance) {
  return make(schedule, std::move(prompt), task_seed,
              std::vector<double>(schedule.num_scales(), guidance));
}

PlantedTask PlantedTask::make(const ScaleSchedule& schedule, std::string prompt, Seed task_seed,
                              std::vector<double> guidance_per_scale) {
  if (guidance_per_scale.size() != schedule.num_scales()) {
    throw std::invalid_argument("guidance needs one value per scale");
  }
  for (const double g : guidance_per_scale) {
    if (!(g >= 0.0) || !std::isfinite(g)) throw std::invalid_argument("guidance must be >= 0");
  }
  PlantedTask task;
  task.task_seed = task_seed;
  task.guidance = std::move(guidance_per_scale);
  const Seed alignment_base = mix64(task_seed + kGolden) ^ fnv1a(prompt);
  task.alignment_target = make_target(schedule, alignment_base, 0);
  task.style_target = make_target(schedule, task_seed, 1);
  task.prompt = std::move(prompt);
  return task;
}

double target_probability(double guidance, double temperature, std::uint32_t vocab_size) {
  return 1.0 / (1.0 + static_cast<double>(vocab_size - 1) * std::exp(-guidance / temperature));
}

TokenMap sample_scale(const ScaleSchedule& schedule, const TokenMap& target, std::size_t scale,
                      Seed seed, double guidance, double temperature) {
  const auto vocab = schedule.vocab_size();
  const double p = target_probability(guidance, temperature, vocab);
  TokenMap out{scale, {}};
  out.tokens.reserve(target.tokens.size());
  for (std::uint32_t i = 0; i < target.tokens.size(); ++i) {
    SplitMix64 rng(derive_seed(seed, scale, 0, i));
    const Token planted = target.tokens[i];
    if (rng.next_unit() < p) {
      out.tokens.push_back(planted);
    } else {
      const auto j = static_cast<Token>(rng.next_below(vocab - 1));
      out.tokens.push_back(j < planted ? j : j + 1);
    }
  }
  return out;
}

double weighted_match(const ScaleSchedule& schedule, std::span<const TokenMap> scales,
                      std::span<const TokenMap> target) {
  double total = 0.0;
  const double all = static_cast<double>(schedule.total_tokens());
  for (std::size_t k = 0; k < scales.size(); ++k) {
    const auto& got = scales[k].tokens;
    const auto& want = target[k].tokens;
    std::uint64_t matches = 0;
    for (std::size_t i = 0; i < got.size(); ++i) matches += got[i] == want[i] ? 1 : 0;
    const double n = static_cast<double>(got.size());
    total += (n / all) * (static_cast<double>(matches) / n);
  }
  return total;
}

Artifact decode(const SequenceState& sequence, const PlantedTask& task) {
  if (!sequence.complete()) throw std::invalid_argument("cannot decode an incomplete sequence");
  const auto& schedule = sequence.schedule();
  Artifact art;
  art.tokens = sequence.flat_tokens();
  art.alignment = weighted_match(schedule, sequence.scales(), task.alignment_target);
  art.quality = weighted_match(schedule, sequence.scales(), task.style_target);
  return art;
}

SyntheticGenerator::SyntheticGenerator(SchedulePtr schedule, PlantedTask task)
    : schedule_(std::move(schedule)), task_(std::move(task)) {
  if (!schedule_) throw std::invalid_argument("generator requires a schedule");
  if (task_.alignment_target.size() != schedule_->num_scales() ||
      task_.style_target.size() != schedule_->num_scales()) {
    throw std::invalid_argument("task targets do not conform to the schedule");
  }
}

TokenMap SyntheticGenerator::forward(const SequenceState& prefix, Seed seed, double temperature) {
  const std::size_t scale = prefix.depth() + 1;
  return sample_scale(*schedule_, task_.alignment_target[scale - 1], scale, seed,
                      task_.guidance_at(scale), temperature);
}

Artifact SyntheticGenerator::decode(const SequenceState& sequence) {
  return scalesearch::decode(sequence, task_);
}

// ---------------------------------------------------------------------------

GenerationSession::GenerationSession(Generator& generator, PrefixCache* cache)
    : generator_(generator), cache_(cache) {}

SequenceState GenerationSession::root(Seed root_seed) const {
  return SequenceState(generator_.schedule(), root_seed);
}

TokenMap GenerationSession::step(const SequenceState& prefix, Seed seed, double temperature) {
  if (prefix.complete()) throw std::invalid_argument("step on a complete sequence");
  if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be > 0");
  if (cache_ == nullptr) {
    TokenMap out = generator_.forward(prefix, seed, temperature);
    ledger_.record_forward_pass();
    return out;
  }
  const auto key = PrefixKey::of(prefix, seed, temperature);
  if (auto hit = cache_->find(key)) {
    ledger_.record_cache_hit();
    return std::move(*hit);
  }
  TokenMap out = generator_.forward(prefix, seed, temperature);
  ledger_.record_forward_pass();
  cache_->insert(key, out);
  return out;
}

SequenceState GenerationSession::extend(const SequenceState& prefix, std::uint32_t branch,
                                        double temperature) {
  TokenMap tokens = step(prefix, prefix.lineage().child_seed(branch), temperature);
  return prefix.extended(std::move(tokens), branch);
}

SequenceState GenerationSession::rollout(const SequenceState& prefix, std::uint32_t first_branch,
                                         double temperature) {
  SequenceState seq = prefix;
  std::uint32_t branch = first_branch;
  while (!seq.complete()) {
    seq = extend(seq, branch, temperature);
    branch = 0;
  }
  return seq;
}

SequenceState GenerationSession::replay(const SeedLineage& lineage, double temperature) {
  SequenceState seq = root(lineage.root());
  for (const auto b : lineage.branches()) seq = extend(seq, b, temperature);
  return seq;
}

BudgetLedger GenerationSession::take_ledger() noexcept { return std::exchange(ledger_, {}); }

// ---------------------------------------------------------------------------

PrefixKey PrefixKey::of(const SequenceState& prefix, Seed seed, double temperature) {
  const auto branches = prefix.lineage().branches();
  return PrefixKey{prefix.schedule().fingerprint(), prefix.lineage().root(),
                   std::vector<std::uint32_t>(branches.begin(), branches.end()), seed,
                   std::bit_cast<std::uint64_t>(temperature)};
}

std::size_t PrefixKeyHash::operator()(const PrefixKey& key) const noexcept {
  std::uint64_t h = mix64(key.schedule ^ key.root);
  h = mix64(h ^ fnv1a(std::span<const std::uint32_t>(key.branches)));
  h = mix64(h ^ key.seed);
  return static_cast<std::size_t>(mix64(h ^ key.temperature_bits));
}

std::optional<TokenMap> PrefixCache::find(const PrefixKey& key) {
  std::lock_guard lock(mutex_);
  const auto it = entries_.find(key);
  if (it == entries_.end()) {
    ++misses_;
    return std::nullopt;
  }
  ++hits_;
  order_.splice(order_.begin(), order_, it->second.position);
  return it->second.value;
}

void PrefixCache::insert(const PrefixKey& key, TokenMap value) {
  std::lock_guard lock(mutex_);
  if (const auto it = entries_.find(key); it != entries_.end()) {
    it->second.value = std::move(value);
    order_.splice(order_.begin(), order_, it->second.position);
    return;
  }
  order_.push_front(key);
  entries_.emplace(key, Entry{std::move(value), order_.begin()});
  if (capacity_ > 0 && entries_.size() > capacity_) {
    entries_.erase(order_.back());
    order_.pop_back();
    ++evictions_;
  }
}

void PrefixCache::clear() {
  std::lock_guard lock(mutex_);
  entries_.clear();
  order_.clear();
}

std::size_t PrefixCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

std::uint64_t PrefixCache::hits() const {
  std::lock_guard lock(mutex_);
  return hits_;
}

std::uint64_t PrefixCache::misses() const {
  std::lock_guard lock(mutex_);
  return misses_;
}

std::uint64_t PrefixCache::evictions() const {
  std::lock_guard lock(mutex_);
  return evictions_;
}

}  // namespace scalesearch
