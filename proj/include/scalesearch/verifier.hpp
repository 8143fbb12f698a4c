// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "scalesearch/core.hpp"
#include "scalesearch/generator.hpp"

namespace scalesearch {

enum class VerifierKind { alignment, quality, preference, binary, remote };

std::string_view to_string(VerifierKind kind);
VerifierKind verifier_kind_from_string(std::string_view name);

/// Synthetic kinds score a·alignment + b·quality + ε with ε ~ N(0, σ²).
/// Binary scores 1[alignment >= threshold]. Remote defers to an endpoint.
struct VerifierSpec {
  std::string id;
  VerifierKind kind = VerifierKind::alignment;
  double alignment_weight = 1.0;
  double quality_weight = 0.0;
  double noise_sigma = 0.0;
  double threshold = 0.5;

  // Presets standing in for CLIP-style, aesthetic and human-preference scorers.
  static VerifierSpec clip_like(double noise_sigma = 0.0, std::string id = "clip");
  static VerifierSpec aesthetic_like(double noise_sigma = 0.0, std::string id = "aesthetic");
  static VerifierSpec preference_like(double noise_sigma = 0.0, std::string id = "imagereward");
  static VerifierSpec binary(double threshold, std::string id = "vlm");
  static VerifierSpec remote(std::string id);

  /// Throws std::invalid_argument when weights, sigma or threshold are out of range.
  void validate() const;
};

/// Seed for a verifier's noise on one image. Depends on token content, the
/// verifier id and a run-level base seed, so rescoring an image is stable.
Seed noise_seed(std::span<const Token> tokens, std::string_view verifier_id, Seed base);

/// Scores one artifact with a local (synthetic or binary) verifier. Remote
/// specs need a client and throw std::logic_error here.
double score(const Artifact& artifact, std::string_view prompt, const VerifierSpec& spec,
             Seed seed);

class Verifier {
 public:
  virtual ~Verifier() = default;
  virtual const VerifierSpec& spec() const = 0;
  virtual double score(const Artifact& artifact, std::string_view prompt, Seed seed) = 0;
};

class SyntheticVerifier final : public Verifier {
 public:
  explicit SyntheticVerifier(VerifierSpec spec);
  const VerifierSpec& spec() const override { return spec_; }
  double score(const Artifact& artifact, std::string_view prompt, Seed seed) override {
    return scalesearch::score(artifact, prompt, spec_, seed);
  }

 private:
  VerifierSpec spec_;
};

/// A set of verifiers addressable by id.
class VerifierRoster {
 public:
  void add(std::shared_ptr<Verifier> verifier);
  bool contains(std::string_view id) const;
  Verifier& at(std::string_view id) const;
  std::vector<VerifierSpec> specs() const;
  std::size_t size() const noexcept { return verifiers_.size(); }

  static VerifierRoster synthetic(std::span<const VerifierSpec> specs);

 private:
  std::vector<std::shared_ptr<Verifier>> verifiers_;
};

/// A complete, decoded and scored sequence.
struct ScoredCandidate {
  SequenceState sequence;
  Artifact artifact;
  std::map<std::string, double> scores;
  std::optional<double> avg_rank;
  /// Position in the run's verification order.
  std::size_t order = 0;

  double score_of(std::string_view verifier_id) const;
};

/// How the best candidate is chosen from a scored set.
struct SelectionRule {
  enum class Kind { single, ensemble, binary };

  Kind kind = Kind::single;
  /// single: {id}; ensemble: member ids; binary: {binary id, secondary id}.
  std::vector<std::string> verifiers;
  /// ensemble only: verifier whose score breaks avg-rank ties.
  std::string tiebreak;

  static SelectionRule single(std::string id);
  static SelectionRule ensemble(std::vector<std::string> ids, std::string primary);
  static SelectionRule binary(std::string binary_id, std::string secondary_id);

  /// The verifier whose raw score represents a candidate in traces and
  /// variance estimates: the single verifier, the ensemble tiebreak, or the
  /// binary rule's secondary.
  const std::string& primary() const;
  std::string label() const;
};

/// Mean ranks (1 = best, ties share the mean of their positions) for one
/// score column.
std::vector<double> mean_ranks(std::span<const double> scores);

/// Average over `verifier_ids` of each candidate's mean rank. Stores it in
/// ScoredCandidate::avg_rank and returns the argmin, ties broken by higher
/// `primary_tiebreak` score, then lower index. Throws std::invalid_argument on
/// an empty list or a missing score.
std::size_t ensemble_select(std::span<ScoredCandidate> candidates,
                            std::span<const std::string> verifier_ids,
                            std::string_view primary_tiebreak);

/// Among candidates passing the binary verifier (all of them if none pass),
/// the highest secondary score; ties go to the lowest index.
std::size_t binary_select_with_tiebreak(std::span<const ScoredCandidate> candidates,
                                        std::string_view binary_id,
                                        std::string_view secondary_id);

/// Candidate indices best-first under `rule`; full ties keep the lower index.
/// Ensemble rules write avg_rank into the candidates.
std::vector<std::size_t> rank_order(std::span<ScoredCandidate> candidates,
                                    const SelectionRule& rule);

struct CostProfile {
  std::string verifier_id;
  std::size_t calls = 0;
  std::chrono::nanoseconds median_latency{0};
  /// Growth of the process's peak resident set while profiling, in bytes.
  std::size_t peak_memory_bytes = 0;
};

/// Times `calls` scoring calls (>= 100) cycling through `samples`.
CostProfile cost_profile(Verifier& verifier, std::span<const Artifact> samples,
                         std::string_view prompt, std::size_t calls = 200);

}  // namespace scalesearch
