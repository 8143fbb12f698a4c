// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "scalesearch/core.hpp"
#include "scalesearch/generator.hpp"
#include "scalesearch/search.hpp"
#include "scalesearch/verifier.hpp"

namespace scalesearch {

struct ScalingPoint {
  std::uint32_t k = 0;
  double e_max = 0.0;
  double std = 0.0;
};

struct LogFit {
  double alpha = 0.0;
  double beta = 0.0;
  double r_squared = 0.0;
};

/// Expected best-of-k score as a function of k, with its fit
/// e_max ≈ alpha·ln(k) + beta.
struct ScalingCurve {
  std::string verifier_id;
  std::vector<ScalingPoint> points;
  LogFit fit;
};

/// For each k: draw k of the scores without replacement, take the max, and
/// repeat. Reports the mean and sample standard deviation of those maxima
/// (std is 0 with a single repeat). Throws std::invalid_argument when any
/// k is 0 or exceeds scores.size(), or repeats is 0.
std::vector<ScalingPoint> expected_max_bootstrap(std::span<const double> scores,
                                                 std::span<const std::uint32_t> ks,
                                                 std::uint32_t repeats = 10, Seed seed = 0);

/// E[max of k i.i.d. draws] = Σ_s s·(F(s)^k − F(s⁻)^k) over the sorted support
/// of a finite (value, probability) distribution. Probabilities must be
/// non-negative and sum to 1 within 1e-9; duplicate values are merged.
double exact_expected_max(std::span<const std::pair<double, double>> distribution,
                          std::uint32_t k);

/// Least squares of e_max on ln(k). Needs at least three points with distinct
/// k. When every e_max is equal, r_squared is reported as 1.
LogFit fit_log(std::span<const ScalingPoint> points);

/// `count` roughly log-spaced distinct integers from lo to hi inclusive.
std::vector<std::uint32_t> log_spaced(std::uint32_t lo, std::uint32_t hi, std::size_t count);

/// Builds a generator for one trial's task. The default makes a
/// SyntheticGenerator; a remote-backed factory can ignore the task.
using GeneratorFactory =
    std::function<std::unique_ptr<Generator>(const SchedulePtr&, const PlantedTask&)>;

GeneratorFactory synthetic_generator_factory();

/// Shared inputs for multi-trial experiments. Trial t uses
///   task seed  = derive_seed(base_seed, 1, t, 0)
///   root seed  = derive_seed(base_seed, 2, t, 0)
///   noise base = derive_seed(base_seed, 3, t, 0)
///   prompt     = prompts[t % prompts.size()]
struct ExperimentSetup {
  SchedulePtr schedule;
  std::vector<std::string> prompts{"a photo of a cat"};
  /// One value per scale, or a single value broadcast to every scale.
  std::vector<double> guidance{3.0};
  VerifierRoster* verifiers = nullptr;
  Seed base_seed = 0;
  GeneratorFactory make_generator;
  std::size_t threads = 1;

  struct Trial {
    PlantedTask task;
    Seed root_seed;
    Seed noise_base;
  };
  Trial trial(std::uint32_t t) const;
};

/// Value of one evaluation metric for a selected candidate: "alignment" and
/// "quality" are the artifact's latent truths; anything else is a verifier id
/// scored with the trial's noise base.
double evaluate_metric(const ScoredCandidate& candidate, std::string_view metric,
                       VerifierRoster& verifiers, std::string_view prompt, Seed noise_base);

struct MetricSummary {
  std::string metric;
  double mean = 0.0;
  double std = 0.0;
  std::size_t count = 0;
  double standard_error() const;
};

struct ComparisonRow {
  std::string label;
  SearchConfig config;
  std::string selection;
  /// Per-run budget, averaged over trials (constant for fixed strategies).
  double images = 0.0;
  double nfes = 0.0;
  std::vector<MetricSummary> metrics;
  /// Raw per-trial values, parallel to `metrics`.
  std::vector<std::vector<double>> samples;

  const MetricSummary& metric(std::string_view name) const;
};

struct ComparisonReport {
  double temperature = 1.0;
  std::uint32_t trials = 0;
  std::vector<std::string> eval_metrics;
  std::vector<ComparisonRow> rows;
};

/// Runs every config under every selection rule for `trials` seeded trials
/// and summarizes each evaluation metric of the selected image. Rows come out
/// in grid order, then selection order, which is the select-by × evaluate-by
/// cross-metric layout. An empty `selections` keeps each config's own rule.
ComparisonReport compare_strategies(std::span<const SearchConfig> grid,
                                    const ExperimentSetup& setup,
                                    std::span<const SelectionRule> selections,
                                    std::span<const std::string> eval_metrics,
                                    std::uint32_t trials);

/// Pooled standard error of the difference of two means.
double pooled_standard_error(const MetricSummary& a, const MetricSummary& b);

/// Budget-scaling study: for each prompt, `samples` independent rollouts are
/// scored by every verifier in `verifier_ids`; each verifier's bootstrap
/// curve is averaged over prompts and then fitted.
std::vector<ScalingCurve> budget_scaling(const ExperimentSetup& setup,
                                         std::span<const std::string> verifier_ids,
                                         std::uint32_t samples, std::span<const std::uint32_t> ks,
                                         std::uint32_t repeats, double temperature = 1.0);

/// Mean fraction of differing token positions over all candidate pairs.
double mean_pairwise_diversity(std::span<const ScoredCandidate> candidates);

}  // namespace scalesearch
