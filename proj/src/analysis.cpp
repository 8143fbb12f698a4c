// SPDX-License-Identifier: Apache-2.0
#include "scalesearch/analysis.hpp"

#include "scalesearch/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>

namespace scalesearch {

namespace {

std::pair<double, double> mean_and_std(std::span<const double> xs) {
  // Welford: a constant column yields exactly that constant and zero spread.
  double mean = 0.0, m2 = 0.0;
  std::size_t n = 0;
  for (const double x : xs) {
    ++n;
    const double delta = x - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (x - mean);
  }
  if (n < 2) return {mean, 0.0};
  return {mean, std::sqrt(m2 / static_cast<double>(n - 1))};
}

}  // namespace

std::vector<ScalingPoint> expected_max_bootstrap(std::span<const double> scores,
                                                 std::span<const std::uint32_t> ks,
                                                 std::uint32_t repeats, Seed seed) {
  if (repeats == 0) throw std::invalid_argument("bootstrap needs repeats >= 1");
  const std::size_t n = scores.size();
  for (const auto k : ks) {
    if (k == 0 || k > n) {
      throw std::invalid_argument("budget k=" + std::to_string(k) + " outside [1, " +
                                  std::to_string(n) + "]");
    }
  }
  std::vector<ScalingPoint> out;
  out.reserve(ks.size());
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::vector<std::size_t> swaps;
  std::vector<double> maxima(repeats);
  for (const auto k : ks) {
    swaps.resize(k);
    for (std::uint32_t r = 0; r < repeats; ++r) {
      SplitMix64 rng(derive_seed(seed, 1, k, r));
      double best = -std::numeric_limits<double>::infinity();
      // Partial Fisher-Yates: the first k slots are a uniform k-subset.
      for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.next_below(n - i));
        std::swap(idx[i], idx[j]);
        swaps[i] = j;
        best = std::max(best, scores[idx[i]]);
      }
      // Undo in reverse so every repeat starts from the identity.
      for (std::size_t i = k; i-- > 0;) std::swap(idx[i], idx[swaps[i]]);
      maxima[r] = best;
    }
    const auto [mean, sd] = mean_and_std(maxima);
    out.push_back({k, mean, sd});
  }
  return out;
}

double exact_expected_max(std::span<const std::pair<double, double>> distribution,
                          std::uint32_t k) {
  if (k == 0) throw std::invalid_argument("exact_expected_max needs k >= 1");
  if (distribution.empty()) throw std::invalid_argument("empty distribution");
  std::map<double, double> support;
  double total = 0.0;
  for (const auto& [value, prob] : distribution) {
    if (!(prob >= 0.0) || !std::isfinite(value)) {
      throw std::invalid_argument("invalid distribution entry");
    }
    support[value] += prob;
    total += prob;
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("probabilities must sum to 1");

  double result = 0.0;
  double below = 0.0;  // F(s⁻)
  for (const auto& [value, prob] : support) {
    const double at = std::min(1.0, below + prob);
    result += value * (std::pow(at, k) - std::pow(below, k));
    below = at;
  }
  return result;
}

LogFit fit_log(std::span<const ScalingPoint> points) {
  if (points.size() < 3) throw std::invalid_argument("fit_log needs at least 3 points");
  std::set<std::uint32_t> distinct;
  for (const auto& p : points) {
    if (p.k == 0) throw std::invalid_argument("fit_log needs k >= 1");
    distinct.insert(p.k);
  }
  if (distinct.size() != points.size()) throw std::invalid_argument("fit_log needs distinct k");

  const double n = static_cast<double>(points.size());
  double sx = 0.0, sy = 0.0;
  for (const auto& p : points) {
    sx += std::log(static_cast<double>(p.k));
    sy += p.e_max;
  }
  const double mx = sx / n;
  const double my = sy / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& p : points) {
    const double dx = std::log(static_cast<double>(p.k)) - mx;
    const double dy = p.e_max - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  LogFit fit;
  fit.alpha = sxy / sxx;
  fit.beta = my - fit.alpha * mx;
  if (syy == 0.0) {
    fit.r_squared = 1.0;
  } else {
    double ss_res = 0.0;
    for (const auto& p : points) {
      const double r = p.e_max - (fit.alpha * std::log(static_cast<double>(p.k)) + fit.beta);
      ss_res += r * r;
    }
    fit.r_squared = std::clamp(1.0 - ss_res / syy, 0.0, 1.0);
  }
  return fit;
}

std::vector<std::uint32_t> log_spaced(std::uint32_t lo, std::uint32_t hi, std::size_t count) {
  if (lo == 0 || hi < lo || count == 0) throw std::invalid_argument("invalid log_spaced range");
  std::set<std::uint32_t> ks{lo, hi};
  if (count > 1) {
    const double a = std::log(static_cast<double>(lo));
    const double b = std::log(static_cast<double>(hi));
    for (std::size_t i = 0; i < count; ++i) {
      const double t = static_cast<double>(i) / static_cast<double>(count - 1);
      ks.insert(static_cast<std::uint32_t>(std::lround(std::exp(a + t * (b - a)))));
    }
  }
  return {ks.begin(), ks.end()};
}

GeneratorFactory synthetic_generator_factory() {
  return [](const SchedulePtr& schedule, const PlantedTask& task) -> std::unique_ptr<Generator> {
    return std::make_unique<SyntheticGenerator>(schedule, task);
  };
}

ExperimentSetup::Trial ExperimentSetup::trial(std::uint32_t t) const {
  if (!schedule) throw std::invalid_argument("experiment needs a schedule");
  if (prompts.empty()) throw std::invalid_argument("experiment needs at least one prompt");
  std::vector<double> g = guidance;
  if (g.size() == 1) g.assign(schedule->num_scales(), guidance.front());
  return Trial{PlantedTask::make(*schedule, prompts[t % prompts.size()],
                                 derive_seed(base_seed, 1, t, 0), std::move(g)),
               derive_seed(base_seed, 2, t, 0), derive_seed(base_seed, 3, t, 0)};
}

double evaluate_metric(const ScoredCandidate& candidate, std::string_view metric,
                       VerifierRoster& verifiers, std::string_view prompt, Seed noise_base) {
  if (metric == "alignment") return candidate.artifact.alignment;
  if (metric == "quality") return candidate.artifact.quality;
  const std::string id(metric);
  if (const auto it = candidate.scores.find(id); it != candidate.scores.end()) return it->second;
  return verifiers.at(id).score(candidate.artifact, prompt,
                                noise_seed(candidate.artifact.tokens, id, noise_base));
}

double MetricSummary::standard_error() const {
  return count > 0 ? std / std::sqrt(static_cast<double>(count)) : 0.0;
}

const MetricSummary& ComparisonRow::metric(std::string_view name) const {
  for (const auto& m : metrics) {
    if (m.metric == name) return m;
  }
  throw std::invalid_argument("row has no metric '" + std::string(name) + "'");
}

double pooled_standard_error(const MetricSummary& a, const MetricSummary& b) {
  const double va = a.count > 0 ? a.std * a.std / static_cast<double>(a.count) : 0.0;
  const double vb = b.count > 0 ? b.std * b.std / static_cast<double>(b.count) : 0.0;
  return std::sqrt(va + vb);
}

ComparisonReport compare_strategies(std::span<const SearchConfig> grid,
                                    const ExperimentSetup& setup,
                                    std::span<const SelectionRule> selections,
                                    std::span<const std::string> eval_metrics,
                                    std::uint32_t trials) {
  if (trials < 1) throw std::invalid_argument("compare_strategies needs trials >= 1");
  if (setup.verifiers == nullptr) throw std::invalid_argument("experiment needs a verifier roster");
  const GeneratorFactory factory =
      setup.make_generator ? setup.make_generator : synthetic_generator_factory();

  // Expand the grid into rows.
  std::vector<ComparisonRow> rows;
  for (const auto& base : grid) {
    if (selections.empty()) {
      rows.push_back({base.label(), base, base.selection.label(), 0, 0, {}, {}});
    } else {
      for (const auto& rule : selections) {
        SearchConfig cfg = base;
        cfg.selection = rule;
        rows.push_back({cfg.label(), cfg, rule.label(), 0, 0, {}, {}});
      }
    }
  }
  for (auto& row : rows) row.samples.assign(eval_metrics.size(), std::vector<double>(trials));
  // [row][trial] budgets
  std::vector<std::vector<BudgetLedger>> ledgers(rows.size(), std::vector<BudgetLedger>(trials));

  parallel_for(trials, setup.threads, [&](std::size_t t) {
    const auto trial = setup.trial(static_cast<std::uint32_t>(t));
    auto generator = factory(setup.schedule, trial.task);
    SearchEnvironment env{*generator, *setup.verifiers, trial.task.prompt, trial.noise_base};
    for (std::size_t r = 0; r < rows.size(); ++r) {
      SearchConfig cfg = rows[r].config;
      cfg.root_seed = trial.root_seed;
      const auto result = run_search(cfg, env);
      ledgers[r][t] = result.ledger;
      for (std::size_t m = 0; m < eval_metrics.size(); ++m) {
        rows[r].samples[m][t] = evaluate_metric(result.best, eval_metrics[m], *setup.verifiers,
                                                trial.task.prompt, trial.noise_base);
      }
    }
  });

  for (std::size_t r = 0; r < rows.size(); ++r) {
    double images = 0.0, nfes = 0.0;
    for (const auto& l : ledgers[r]) {
      images += static_cast<double>(l.images_verified);
      nfes += static_cast<double>(l.nfes);
    }
    rows[r].images = images / trials;
    rows[r].nfes = nfes / trials;
    for (std::size_t m = 0; m < eval_metrics.size(); ++m) {
      const auto [mean, sd] = mean_and_std(rows[r].samples[m]);
      rows[r].metrics.push_back({eval_metrics[m], mean, sd, trials});
    }
  }

  ComparisonReport report;
  report.temperature = grid.empty() ? 1.0 : grid.front().temperature;
  report.trials = trials;
  report.eval_metrics.assign(eval_metrics.begin(), eval_metrics.end());
  report.rows = std::move(rows);
  return report;
}

std::vector<ScalingCurve> budget_scaling(const ExperimentSetup& setup,
                                         std::span<const std::string> verifier_ids,
                                         std::uint32_t samples, std::span<const std::uint32_t> ks,
                                         std::uint32_t repeats, double temperature) {
  if (setup.verifiers == nullptr) throw std::invalid_argument("experiment needs a verifier roster");
  if (samples == 0) throw std::invalid_argument("scaling study needs samples >= 1");
  for (const auto k : ks) {
    if (k == 0 || k > samples) {
      throw std::invalid_argument("budget k=" + std::to_string(k) + " exceeds " +
                                  std::to_string(samples) + " samples");
    }
  }
  const GeneratorFactory factory =
      setup.make_generator ? setup.make_generator : synthetic_generator_factory();
  const std::size_t prompts = setup.prompts.size();

  // [prompt][verifier] -> points
  std::vector<std::vector<std::vector<ScalingPoint>>> per_prompt(
      prompts, std::vector<std::vector<ScalingPoint>>(verifier_ids.size()));

  parallel_for(prompts, setup.threads, [&](std::size_t p) {
    const auto trial = setup.trial(static_cast<std::uint32_t>(p));
    auto generator = factory(setup.schedule, trial.task);
    GenerationSession session(*generator, nullptr);
    const auto root = session.root(trial.root_seed);
    std::vector<std::vector<double>> scores(verifier_ids.size());
    for (std::uint32_t i = 0; i < samples; ++i) {
      const auto seq = session.rollout(root, i, temperature);
      const auto art = session.decode(seq);
      for (std::size_t v = 0; v < verifier_ids.size(); ++v) {
        const auto& id = verifier_ids[v];
        scores[v].push_back(setup.verifiers->at(id).score(
            art, trial.task.prompt, noise_seed(art.tokens, id, trial.noise_base)));
      }
    }
    for (std::size_t v = 0; v < verifier_ids.size(); ++v) {
      per_prompt[p][v] = expected_max_bootstrap(scores[v], ks, repeats,
                                                derive_seed(setup.base_seed, 4, p, v));
    }
  });

  std::vector<ScalingCurve> curves;
  for (std::size_t v = 0; v < verifier_ids.size(); ++v) {
    ScalingCurve curve;
    curve.verifier_id = verifier_ids[v];
    for (std::size_t i = 0; i < ks.size(); ++i) {
      ScalingPoint pt{ks[i], 0.0, 0.0};
      for (std::size_t p = 0; p < prompts; ++p) {
        pt.e_max += per_prompt[p][v][i].e_max;
        pt.std += per_prompt[p][v][i].std;
      }
      pt.e_max /= static_cast<double>(prompts);
      pt.std /= static_cast<double>(prompts);
      curve.points.push_back(pt);
    }
    if (curve.points.size() >= 3) curve.fit = fit_log(curve.points);
    curves.push_back(std::move(curve));
  }
  return curves;
}

double mean_pairwise_diversity(std::span<const ScoredCandidate> candidates) {
  if (candidates.size() < 2) return 0.0;
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t a = 0; a < candidates.size(); ++a) {
    for (std::size_t b = a + 1; b < candidates.size(); ++b) {
      const auto& x = candidates[a].artifact.tokens;
      const auto& y = candidates[b].artifact.tokens;
      std::size_t differ = 0;
      for (std::size_t i = 0; i < x.size(); ++i) differ += x[i] != y[i] ? 1 : 0;
      total += static_cast<double>(differ) / static_cast<double>(x.size());
      ++pairs;
    }
  }
  return total / static_cast<double>(pairs);
}

}  // namespace scalesearch
