// SPDX-License-Identifier: Apache-2.0
// Acceptance run. Each criterion prints one PASS or FAIL line with the
// measured values; the exit status is nonzero if any criterion fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "scalesearch/analysis.hpp"
#include "scalesearch/search.hpp"

using namespace scalesearch;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      if (pass) detail << "failed: ";
      else detail << "; ";
      detail << what;
      pass = false;
    }
  }
};

SchedulePtr desk() { return std::make_shared<const ScaleSchedule>(ScaleSchedule::desk_default()); }

std::vector<VerifierSpec> trio(double sigma) {
  return {VerifierSpec::clip_like(sigma), VerifierSpec::aesthetic_like(sigma),
          VerifierSpec::preference_like(sigma)};
}

std::size_t threads() { return std::max(1u, std::thread::hardware_concurrency()); }

// One task, one generator, one roster.
struct Bench {
  std::vector<double> broadcast(std::vector<double> g) const {
    if (g.size() == 1) g.assign(schedule->num_scales(), g.front());
    return g;
  }

  SchedulePtr schedule;
  PlantedTask task;
  SyntheticGenerator generator;
  VerifierRoster roster;

  Bench(SchedulePtr s, Seed task_seed, std::vector<double> guidance, std::vector<VerifierSpec> specs)
      : schedule(std::move(s)),
        task(PlantedTask::make(*schedule, "a photo of a cat", task_seed, broadcast(std::move(guidance)))),
        generator(schedule, task),
        roster(VerifierRoster::synthetic(specs)) {}

  SearchResult run(SearchConfig cfg, Seed noise_base = 0) {
    SearchEnvironment env{generator, roster, task.prompt, noise_base};
    return run_search(cfg, env);
  }
};

std::string fmt(double x, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << x;
  return s.str();
}

// --------------------------------------------------------------------------

void budgets(Outcome& o) {
  Bench b(desk(), 0, {3.0}, trio(0.05));
  struct Row {
    SearchConfig cfg;
    std::uint64_t images, nfes;
  };
  const std::vector<Row> rows{{SearchConfig::random(54), 54, 702},
                              {SearchConfig::random(195), 195, 2535},
                              {SearchConfig::random(390), 390, 5070},
                              {SearchConfig::gto(15), 195, 1365},
                              {SearchConfig::gto(30), 390, 2730},
                              {SearchConfig::beam(3, 5), 195, 1365},
                              {SearchConfig::beam(3, 10), 390, 2730}};
  for (const auto& row : rows) {
    const auto r = b.run(row.cfg);
    o.require(r.ledger.nfes == row.nfes && r.ledger.images_verified == row.images,
              row.cfg.label() + " gave " + std::to_string(r.ledger.images_verified) + " images, " +
                  std::to_string(r.ledger.nfes) + " NFEs");
    o.detail << (o.pass ? "" : " ") << row.cfg.label() << "=" << r.ledger.nfes << " ";
  }
}

void efficiency(Outcome& o) {
  std::size_t checked = 0;
  for (std::uint32_t k = 2; k <= 20; ++k) {
    std::vector<std::uint32_t> sizes(k, 1);
    auto sched = std::make_shared<const ScaleSchedule>(sizes, 4);
    Bench b(sched, k, {2.0}, trio(0.05));
    for (const auto& [w, c] : {std::pair{1u, 1u}, std::pair{3u, 5u}, std::pair{2u, 4u}}) {
      const auto beam = b.run(SearchConfig::beam(w, c));
      const auto random = b.run(SearchConfig::random(w * c * k));
      // Compare as integers: nfes_beam / nfes_random == (K+1) / (2K).
      o.require(beam.ledger.images_verified == random.ledger.images_verified &&
                    beam.ledger.nfes * 2 * k == random.ledger.nfes * (k + 1),
                "K=" + std::to_string(k) + " beam(" + std::to_string(w) + "," + std::to_string(c) +
                    ") ratio " + std::to_string(beam.ledger.nfes) + "/" +
                    std::to_string(random.ledger.nfes));
      ++checked;
    }
  }
  const double r13 = 1365.0 / 2535.0;
  o.detail << checked << " (K, w, c) cases exact; K=13 ratio " << fmt(r13) << " = 14/26";
}

void exhaustive(Outcome& o) {
  auto sched = std::make_shared<const ScaleSchedule>(ScaleSchedule::tiny());
  const auto spec = VerifierSpec::clip_like(0.0);
  std::size_t matches = 0, runs = 0;
  for (const double g : {1.0, 3.0}) {
    for (Seed task_seed = 0; task_seed < 100; ++task_seed) {
      Bench b(sched, task_seed, {g}, {spec});
      double best = -1;
      std::vector<Token> best_tokens;
      for (Token x = 0; x < 27; ++x) {
        SequenceState s(sched, 0);
        s = s.extended({1, {x / 9}}, 0).extended({2, {x / 3 % 3}}, 0).extended({3, {x % 3}}, 0);
        const double v = score(decode(s, b.task), b.task.prompt, spec, 0);
        if (v > best) {
          best = v;
          best_tokens = s.flat_tokens();
        }
      }
      auto cfg = SearchConfig::beam(9, 3);
      cfg.root_seed = derive_seed(task_seed, 5, 0, 0);
      const auto r = b.run(cfg);
      ++runs;
      if (r.best.artifact.tokens == best_tokens && r.best.score_of("clip") == best) ++matches;
    }
  }
  o.require(matches == runs, std::to_string(runs - matches) + " seeds disagree with brute force");
  o.detail << matches << "/" << runs << " task seeds (g=1 and g=3) match brute force over 27 sequences";
}

void expected_max(Outcome& o) {
  const std::vector<std::pair<double, double>> dist{
      {0.0, 0.22}, {0.5, 0.18}, {1.0, 0.15}, {1.5, 0.12}, {2.0, 0.10},
      {2.5, 0.08}, {3.0, 0.06}, {4.0, 0.05}, {6.0, 0.03}, {9.0, 0.01}};
  SplitMix64 rng(2024);
  std::vector<double> draws;
  for (int i = 0; i < 2000000; ++i) {
    double u = rng.next_unit();
    double v = dist.back().first;
    for (const auto& [value, p] : dist) {
      if (u < p) {
        v = value;
        break;
      }
      u -= p;
    }
    draws.push_back(v);
  }
  const std::vector<std::uint32_t> ks{1, 2, 5, 10, 20, 50};
  const std::uint32_t repeats = 5000;
  const auto pts = expected_max_bootstrap(draws, ks, repeats, 7);
  for (const auto& pt : pts) {
    const double exact = exact_expected_max(dist, pt.k);
    const double half = 2.576 * pt.std / std::sqrt(static_cast<double>(repeats));
    o.require(std::abs(pt.e_max - exact) <= half,
              "k=" + std::to_string(pt.k) + " bootstrap " + fmt(pt.e_max, 6) + " vs exact " +
                  fmt(exact, 6) + " (CI half-width " + fmt(half, 3) + ")");
    o.detail << (o.pass ? "" : " ") << "k=" << pt.k << ": " << fmt(pt.e_max) << " vs " << fmt(exact)
             << " ±" << fmt(half, 2) << "  ";
  }
}

void scaling_shape(Outcome& o) {
  auto roster = VerifierRoster::synthetic(trio(0.05));
  ExperimentSetup setup;
  setup.schedule = desk();
  setup.guidance = {3.0};
  setup.verifiers = &roster;
  setup.base_seed = 0;
  setup.threads = threads();
  const std::vector<std::string> ids{"clip", "aesthetic", "imagereward"};
  const auto ks = log_spaced(1, 500, 12);
  const auto curves = budget_scaling(setup, ids, 500, ks, 10);
  for (const auto& c : curves) {
    o.require(c.fit.r_squared >= 0.90 && c.fit.alpha > 0,
              c.verifier_id + " r2=" + fmt(c.fit.r_squared) + " alpha=" + fmt(c.fit.alpha));
    o.detail << (o.pass ? "" : " ") << c.verifier_id << ": alpha=" << fmt(c.fit.alpha)
             << " r2=" << fmt(c.fit.r_squared) << "  ";
  }
}

ExperimentSetup default_setup(VerifierRoster& roster, Seed base) {
  ExperimentSetup setup;
  setup.schedule = desk();
  setup.guidance = {3.0};
  setup.verifiers = &roster;
  setup.base_seed = base;
  setup.threads = threads();
  return setup;
}

void ordering(Outcome& o) {
  auto roster = VerifierRoster::synthetic(trio(0.05));
  const auto setup = default_setup(roster, 6);
  const std::vector<SearchConfig> grid{SearchConfig::beam(3, 5), SearchConfig::random(105),
                                       SearchConfig::random(1)};
  const std::vector<std::string> metrics{"alignment"};
  const auto rep = compare_strategies(grid, setup, {}, metrics, 200);
  const auto& beam = rep.rows[0].metric("alignment");
  const auto& random = rep.rows[1].metric("alignment");
  const auto& single = rep.rows[2].metric("alignment");
  o.require(rep.rows[0].nfes == 1365 && rep.rows[1].nfes == 1365, "budgets are not matched");
  const double se_br = pooled_standard_error(beam, random);
  const double se_bs = pooled_standard_error(beam, single);
  const double se_rs = pooled_standard_error(random, single);
  o.require(beam.mean >= random.mean - se_br, "beam below random by more than one pooled SE");
  o.require(beam.mean - single.mean >= 3 * se_bs, "beam not 3 SE above single sample");
  o.require(random.mean - single.mean >= 3 * se_rs, "random not 3 SE above single sample");
  o.detail << "alignment beam(3,5)=" << fmt(beam.mean) << " random(105)=" << fmt(random.mean)
           << " single=" << fmt(single.mean) << "; beam-random=" << fmt(beam.mean - random.mean, 3)
           << " (SE " << fmt(se_br, 3) << "), gaps over single " << fmt((beam.mean - single.mean) / se_bs, 3)
           << " and " << fmt((random.mean - single.mean) / se_rs, 3) << " SE";
}

void hacking(Outcome& o) {
  auto roster = VerifierRoster::synthetic(trio(0.05));
  const auto setup = default_setup(roster, 7);
  const std::vector<SearchConfig> grid{SearchConfig::random(105)};
  const std::vector<SelectionRule> selections{SelectionRule::single("clip"),
                                              SelectionRule::single("imagereward"),
                                              SelectionRule::single("aesthetic")};
  const std::vector<std::string> metrics{"alignment", "quality"};
  const auto rep = compare_strategies(grid, setup, selections, metrics, 100);
  const double clip = rep.rows[0].metric("alignment").mean;
  const double pref = rep.rows[1].metric("alignment").mean;
  const double aes = rep.rows[2].metric("alignment").mean;
  o.require(aes < clip, "aesthetic selection does not lower alignment");
  o.require(aes < pref && pref < clip, "preference selection is not between the two");
  o.detail << "mean alignment by selector: clip=" << fmt(clip) << " imagereward=" << fmt(pref)
           << " aesthetic=" << fmt(aes) << "; quality: aesthetic=" << fmt(rep.rows[2].metric("quality").mean)
           << " clip=" << fmt(rep.rows[0].metric("quality").mean);
}

void temperature(Outcome& o) {
  auto roster = VerifierRoster::synthetic(trio(0.05));
  const auto setup = default_setup(roster, 8);
  double sum1 = 0, sum2 = 0;
  constexpr std::uint32_t trials = 100;
  for (std::uint32_t t = 0; t < trials; ++t) {
    const auto trial = setup.trial(t);
    SyntheticGenerator gen(setup.schedule, trial.task);
    for (const double tau : {1.0, 2.0}) {
      auto cfg = SearchConfig::random(16);
      cfg.temperature = tau;
      cfg.root_seed = trial.root_seed;
      cfg.retain_all = true;
      SearchEnvironment env{gen, roster, trial.task.prompt, trial.noise_base};
      const auto r = run_search(cfg, env);
      (tau == 1.0 ? sum1 : sum2) += mean_pairwise_diversity(r.all_verified);
    }
  }
  const double d1 = sum1 / trials, d2 = sum2 / trials;
  o.require(d2 > d1, "diversity did not increase");
  o.detail << "mean pairwise diversity tau=1: " << fmt(d1) << ", tau=2: " << fmt(d2);
}

void allocation(Outcome& o) {
  SplitMix64 rng(31);
  for (int t = 0; t < 2000; ++t) {
    const std::size_t steps = 1 + rng.next_below(20);
    const auto total = static_cast<std::uint32_t>(steps + rng.next_below(500));
    std::vector<double> v(steps);
    for (auto& x : v) x = rng.next_below(4) == 0 ? 0.0 : rng.next_unit();
    const auto slots = allocate_slots(v, total);
    const auto sum = std::accumulate(slots.begin(), slots.end(), std::uint64_t{0});
    o.require(sum == total && *std::min_element(slots.begin(), slots.end()) >= 1,
              "allocation does not sum to total_slots");
    const std::vector<double> equal(steps, 0.37);
    const auto uniform = allocate_slots(equal, static_cast<std::uint32_t>(steps * 7));
    o.require(std::all_of(uniform.begin(), uniform.end(), [](auto s) { return s == 7; }),
              "equal variances are not split uniformly");
    if (!o.pass) return;
  }

  // Guidance decays from 3 across the 13 scales. The verifier is nearly
  // noiseless: at sigma 0.05 the noise term is about three times the
  // generator's own score variance and flattens the allocation.
  std::vector<double> guidance;
  for (int k = 0; k < 13; ++k) guidance.push_back(3.0 * std::pow(0.7, k));
  constexpr std::uint32_t total = 130;
  const double uniform_share = total / 13.0;
  double ratio_sum = 0, ratio_min = 1e9;
  std::size_t above = 0;
  for (Seed seed = 0; seed < 50; ++seed) {
    Bench b(desk(), seed, guidance, {VerifierSpec::clip_like(0.005)});
    auto cfg = SearchConfig::dynamic_gto(total, 16);
    cfg.root_seed = derive_seed(seed, 9, 0, 0);
    const auto r = b.run(cfg, seed);
    std::uint32_t step1 = 0, sum = 0;
    for (const auto& step : r.trace) {
      if (step.phase != "allocated") continue;
      if (step.scale == 1) step1 = step.slots;
      sum += step.slots;
    }
    o.require(sum == total, "dynamic run used " + std::to_string(sum) + " slots");
    const double ratio = step1 / uniform_share;
    ratio_sum += ratio;
    ratio_min = std::min(ratio_min, ratio);
    if (ratio >= 1.5) ++above;
  }
  const double mean_ratio = ratio_sum / 50;
  o.require(mean_ratio >= 1.5, "mean step-1 share " + fmt(mean_ratio) + "x uniform");
  o.detail << "2000 random allocations exact; decaying guidance step-1 share mean " << fmt(mean_ratio)
           << "x uniform (min " << fmt(ratio_min) << "x, " << above << "/50 seeds >= 1.5x)";
}

void cache(Outcome& o) {
  SplitMix64 rng(4242);
  std::size_t identical = 0;
  for (int t = 0; t < 200; ++t) {
    Bench b(desk(), rng(), {1.0 + 3.0 * rng.next_unit()}, trio(0.05));
    auto on = SearchConfig::beam(1 + static_cast<std::uint32_t>(rng.next_below(4)),
                                 1 + static_cast<std::uint32_t>(rng.next_below(5)));
    on.root_seed = rng();
    on.temperature = 0.5 + 1.5 * rng.next_unit();
    on.retain_all = true;
    on.cache_capacity = t % 5 == 0 ? 4 : 0;
    auto off = on;
    off.use_cache = false;
    const Seed noise = rng();
    const auto a = b.run(on, noise);
    const auto c = b.run(off, noise);
    const auto closed = closed_form_budget(on, 13);
    bool same = a.best.sequence == c.best.sequence && a.best.scores == c.best.scores &&
                a.best.order == c.best.order && a.all_verified.size() == c.all_verified.size() &&
                a.trace.size() == c.trace.size();
    for (std::size_t i = 0; same && i < a.all_verified.size(); ++i) {
      same = a.all_verified[i].sequence == c.all_verified[i].sequence &&
             a.all_verified[i].scores == c.all_verified[i].scores;
    }
    for (std::size_t i = 0; same && i < a.trace.size(); ++i) {
      same = a.trace[i].candidates == c.trace[i].candidates && a.trace[i].scores == c.trace[i].scores &&
             a.trace[i].kept == c.trace[i].kept;
    }
    o.require(same, "run " + std::to_string(t) + " differs with the cache off");
    o.require(a.ledger.nfes == closed.nfes && c.ledger.nfes == closed.nfes &&
                  a.ledger.images_verified == closed.images && c.ledger.images_verified == closed.images,
              "run " + std::to_string(t) + " breaks the closed form");
    if (same) ++identical;
    if (!o.pass) return;
  }
  o.detail << identical << "/200 randomized beam runs identical with cache on and off; closed forms hold";
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<void(Outcome&)> run;
  };
  const std::vector<Criterion> criteria{
      {1, "budget arithmetic", budgets},
      {2, "efficiency ratio", efficiency},
      {3, "exhaustive optimality", exhaustive},
      {4, "expected-max oracle", expected_max},
      {5, "logarithmic scaling", scaling_shape},
      {6, "strategy ordering at matched NFEs", ordering},
      {7, "verifier hacking", hacking},
      {8, "temperature and diversity", temperature},
      {9, "dynamic allocation", allocation},
      {10, "cache transparency", cache},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.run(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %2d %-36s %s (%.2fs) %s\n", c.id, c.name, o.pass ? "PASS" : "FAIL", secs,
                o.detail.str().c_str());
    std::fflush(stdout);
    if (!o.pass) ++failures;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
