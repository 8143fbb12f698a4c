// SPDX-License-Identifier: Apache-2.0
#include "scalesearch/verifier.hpp"

#include <sys/resource.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <utility>

namespace scalesearch {

std::string_view to_string(VerifierKind kind) {
  switch (kind) {
    case VerifierKind::alignment: return "alignment";
    case VerifierKind::quality: return "quality";
    case VerifierKind::preference: return "preference";
    case VerifierKind::binary: return "binary";
    case VerifierKind::remote: return "remote";
  }
  return "unknown";
}

VerifierKind verifier_kind_from_string(std::string_view name) {
  if (name == "alignment") return VerifierKind::alignment;
  if (name == "quality") return VerifierKind::quality;
  if (name == "preference") return VerifierKind::preference;
  if (name == "binary") return VerifierKind::binary;
  if (name == "remote") return VerifierKind::remote;
  throw std::invalid_argument("unknown verifier kind '" + std::string(name) + "'");
}

VerifierSpec VerifierSpec::clip_like(double noise_sigma, std::string id) {
  return {std::move(id), VerifierKind::alignment, 1.0, 0.0, noise_sigma, 0.5};
}

VerifierSpec VerifierSpec::aesthetic_like(double noise_sigma, std::string id) {
  return {std::move(id), VerifierKind::quality, 0.0, 1.0, noise_sigma, 0.5};
}

VerifierSpec VerifierSpec::preference_like(double noise_sigma, std::string id) {
  return {std::move(id), VerifierKind::preference, 0.7, 0.3, noise_sigma, 0.5};
}

VerifierSpec VerifierSpec::binary(double threshold, std::string id) {
  return {std::move(id), VerifierKind::binary, 1.0, 0.0, 0.0, threshold};
}

VerifierSpec VerifierSpec::remote(std::string id) {
  return {std::move(id), VerifierKind::remote, 0.0, 0.0, 0.0, 0.5};
}

void VerifierSpec::validate() const {
  if (id.empty()) throw std::invalid_argument("verifier id must not be empty");
  switch (kind) {
    case VerifierKind::alignment:
    case VerifierKind::quality:
    case VerifierKind::preference:
      if (alignment_weight < 0.0 || quality_weight < 0.0 ||
          !(alignment_weight + quality_weight > 0.0)) {
        throw std::invalid_argument("verifier '" + id + "' needs a, b >= 0 with a + b > 0");
      }
      if (!(noise_sigma >= 0.0)) {
        throw std::invalid_argument("verifier '" + id + "' needs noise_sigma >= 0");
      }
      break;
    case VerifierKind::binary:
      if (!(threshold >= 0.0 && threshold <= 1.0)) {
        throw std::invalid_argument("verifier '" + id + "' needs threshold in [0, 1]");
      }
      break;
    case VerifierKind::remote:
      break;
  }
}

Seed noise_seed(std::span<const Token> tokens, std::string_view verifier_id, Seed base) {
  return derive_seed(base ^ fnv1a(verifier_id), 1, 0, fnv1a(tokens));
}

double score(const Artifact& artifact, std::string_view /*prompt*/, const VerifierSpec& spec,
             Seed seed) {
  switch (spec.kind) {
    case VerifierKind::binary:
      return artifact.alignment >= spec.threshold ? 1.0 : 0.0;
    case VerifierKind::remote:
      throw std::logic_error("remote verifier '" + spec.id + "' requires an endpoint");
    default:
      break;
  }
  double value = spec.alignment_weight * artifact.alignment + spec.quality_weight * artifact.quality;
  if (spec.noise_sigma > 0.0) {
    SplitMix64 rng(seed);
    const double u1 = rng.next_unit();
    const double u2 = rng.next_unit();
    const double z = std::sqrt(-2.0 * std::log1p(-u1)) * std::cos(2.0 * std::numbers::pi * u2);
    value += spec.noise_sigma * z;
  }
  return value;
}

SyntheticVerifier::SyntheticVerifier(VerifierSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  if (spec_.kind == VerifierKind::remote) {
    throw std::invalid_argument("SyntheticVerifier cannot wrap a remote spec");
  }
}

void VerifierRoster::add(std::shared_ptr<Verifier> verifier) {
  if (!verifier) throw std::invalid_argument("null verifier");
  if (contains(verifier->spec().id)) {
    throw std::invalid_argument("duplicate verifier id '" + verifier->spec().id + "'");
  }
  verifiers_.push_back(std::move(verifier));
}

bool VerifierRoster::contains(std::string_view id) const {
  return std::any_of(verifiers_.begin(), verifiers_.end(),
                     [&](const auto& v) { return v->spec().id == id; });
}

Verifier& VerifierRoster::at(std::string_view id) const {
  for (const auto& v : verifiers_) {
    if (v->spec().id == id) return *v;
  }
  throw std::invalid_argument("unknown verifier '" + std::string(id) + "'");
}

std::vector<VerifierSpec> VerifierRoster::specs() const {
  std::vector<VerifierSpec> out;
  out.reserve(verifiers_.size());
  for (const auto& v : verifiers_) out.push_back(v->spec());
  return out;
}

VerifierRoster VerifierRoster::synthetic(std::span<const VerifierSpec> specs) {
  VerifierRoster roster;
  for (const auto& s : specs) roster.add(std::make_shared<SyntheticVerifier>(s));
  return roster;
}

double ScoredCandidate::score_of(std::string_view verifier_id) const {
  const auto it = scores.find(std::string(verifier_id));
  if (it == scores.end()) {
    throw std::invalid_argument("candidate has no score for verifier '" +
                                std::string(verifier_id) + "'");
  }
  return it->second;
}

// ---------------------------------------------------------------------------
// Selection

SelectionRule SelectionRule::single(std::string id) {
  return {Kind::single, {std::move(id)}, {}};
}

SelectionRule SelectionRule::ensemble(std::vector<std::string> ids, std::string primary) {
  if (ids.empty()) throw std::invalid_argument("ensemble needs at least one verifier");
  if (std::find(ids.begin(), ids.end(), primary) == ids.end()) {
    throw std::invalid_argument("ensemble tiebreak '" + primary + "' is not a member");
  }
  return {Kind::ensemble, std::move(ids), std::move(primary)};
}

SelectionRule SelectionRule::binary(std::string binary_id, std::string secondary_id) {
  return {Kind::binary, {std::move(binary_id), std::move(secondary_id)}, {}};
}

const std::string& SelectionRule::primary() const {
  switch (kind) {
    case Kind::single: return verifiers.at(0);
    case Kind::ensemble: return tiebreak;
    case Kind::binary: return verifiers.at(1);
  }
  return verifiers.at(0);
}

std::string SelectionRule::label() const {
  switch (kind) {
    case Kind::single: return verifiers.at(0);
    case Kind::ensemble: return "ensemble";
    case Kind::binary: return verifiers.at(0) + "+" + verifiers.at(1);
  }
  return {};
}

std::vector<double> mean_ranks(std::span<const double> scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<double> ranks(scores.size());
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j + 1 < idx.size() && scores[idx[j + 1]] == scores[idx[i]]) ++j;
    // positions i..j (0-based) share rank mean(i+1..j+1)
    const double shared = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t t = i; t <= j; ++t) ranks[idx[t]] = shared;
    i = j + 1;
  }
  return ranks;
}

namespace {

std::vector<double> column(std::span<const ScoredCandidate> candidates, std::string_view id) {
  std::vector<double> out;
  out.reserve(candidates.size());
  for (const auto& c : candidates) out.push_back(c.score_of(id));
  return out;
}

void assign_avg_ranks(std::span<ScoredCandidate> candidates,
                      std::span<const std::string> verifier_ids) {
  if (verifier_ids.empty()) throw std::invalid_argument("ensemble needs at least one verifier");
  std::vector<double> sum(candidates.size(), 0.0);
  for (const auto& id : verifier_ids) {
    const auto ranks = mean_ranks(column(candidates, id));
    for (std::size_t i = 0; i < ranks.size(); ++i) sum[i] += ranks[i];
  }
  const double m = static_cast<double>(verifier_ids.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) candidates[i].avg_rank = sum[i] / m;
}

}  // namespace

std::vector<std::size_t> rank_order(std::span<ScoredCandidate> candidates,
                                    const SelectionRule& rule) {
  std::vector<std::size_t> idx(candidates.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (candidates.empty()) return idx;

  switch (rule.kind) {
    case SelectionRule::Kind::single: {
      const auto s = column(candidates, rule.verifiers.at(0));
      std::stable_sort(idx.begin(), idx.end(),
                       [&](std::size_t a, std::size_t b) { return s[a] > s[b]; });
      break;
    }
    case SelectionRule::Kind::ensemble: {
      assign_avg_ranks(candidates, rule.verifiers);
      const auto p = column(candidates, rule.tiebreak);
      std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        const double ra = *candidates[a].avg_rank;
        const double rb = *candidates[b].avg_rank;
        if (ra != rb) return ra < rb;
        return p[a] > p[b];
      });
      break;
    }
    case SelectionRule::Kind::binary: {
      const auto pass = column(candidates, rule.verifiers.at(0));
      const auto sec = column(candidates, rule.verifiers.at(1));
      std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        if (pass[a] != pass[b]) return pass[a] > pass[b];
        return sec[a] > sec[b];
      });
      break;
    }
  }
  return idx;
}

std::size_t ensemble_select(std::span<ScoredCandidate> candidates,
                            std::span<const std::string> verifier_ids,
                            std::string_view primary_tiebreak) {
  if (candidates.empty()) throw std::invalid_argument("ensemble_select on an empty list");
  SelectionRule rule{SelectionRule::Kind::ensemble,
                     std::vector<std::string>(verifier_ids.begin(), verifier_ids.end()),
                     std::string(primary_tiebreak)};
  return rank_order(candidates, rule).front();
}

std::size_t binary_select_with_tiebreak(std::span<const ScoredCandidate> candidates,
                                        std::string_view binary_id,
                                        std::string_view secondary_id) {
  if (candidates.empty()) throw std::invalid_argument("binary selection on an empty list");
  const bool any_pass = std::any_of(candidates.begin(), candidates.end(), [&](const auto& c) {
    return c.score_of(binary_id) >= 1.0;
  });
  std::size_t best = candidates.size();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (any_pass && candidates[i].score_of(binary_id) < 1.0) continue;
    if (best == candidates.size() ||
        candidates[i].score_of(secondary_id) > candidates[best].score_of(secondary_id)) {
      best = i;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------

namespace {

std::size_t peak_rss_bytes() {
  rusage usage{};
  getrusage(RUSAGE_SELF, &usage);
  return static_cast<std::size_t>(usage.ru_maxrss) * 1024;  // Linux reports KiB
}

}  // namespace

CostProfile cost_profile(Verifier& verifier, std::span<const Artifact> samples,
                         std::string_view prompt, std::size_t calls) {
  if (samples.empty()) throw std::invalid_argument("cost_profile needs sample artifacts");
  if (calls < 100) throw std::invalid_argument("cost_profile needs at least 100 calls");

  const std::size_t rss_before = peak_rss_bytes();
  std::vector<std::chrono::nanoseconds> timings;
  timings.reserve(calls);
  volatile double sink = 0.0;
  for (std::size_t i = 0; i < calls; ++i) {
    const auto& art = samples[i % samples.size()];
    const auto t0 = std::chrono::steady_clock::now();
    sink = sink + verifier.score(art, prompt, noise_seed(art.tokens, verifier.spec().id, i));
    const auto t1 = std::chrono::steady_clock::now();
    // steady_clock can report 0 for sub-tick calls; one tick is the floor.
    timings.push_back(std::max(std::chrono::nanoseconds(1),
                               std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0)));
  }
  const std::size_t rss_after = peak_rss_bytes();

  const auto mid = timings.begin() + static_cast<std::ptrdiff_t>(timings.size() / 2);
  std::nth_element(timings.begin(), mid, timings.end());
  return CostProfile{verifier.spec().id, calls, *mid,
                     rss_after > rss_before ? rss_after - rss_before : 0};
}

}  // namespace scalesearch
