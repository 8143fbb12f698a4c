// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

#include "scalesearch/verifier.hpp"

using namespace scalesearch;

namespace {

Artifact art(double alignment, double quality, std::vector<Token> tokens = {0}) {
  Artifact a;
  a.tokens = std::move(tokens);
  a.alignment = alignment;
  a.quality = quality;
  return a;
}

// Candidates with explicit score columns; sequences are placeholders.
std::vector<ScoredCandidate> candidates(const std::vector<std::map<std::string, double>>& cols) {
  auto sched = std::make_shared<const ScaleSchedule>(ScaleSchedule::tiny());
  std::vector<ScoredCandidate> out;
  for (std::size_t i = 0; i < cols.size(); ++i) {
    out.push_back(ScoredCandidate{SequenceState(sched, i), art(0, 0), cols[i], std::nullopt, i});
  }
  return out;
}

std::vector<ScoredCandidate> two_columns(const std::vector<double>& v1, const std::vector<double>& v2) {
  std::vector<std::map<std::string, double>> cols;
  for (std::size_t i = 0; i < v1.size(); ++i) cols.push_back({{"v1", v1[i]}, {"v2", v2[i]}});
  return candidates(cols);
}

}  // namespace

TEST_CASE("synthetic score examples") {
  CHECK(score(art(0.4, 0.9), "p", VerifierSpec::clip_like(0.0), 1) == 0.4);
  CHECK(score(art(0.5, 0.5), "p", VerifierSpec::preference_like(0.0), 1) ==
        doctest::Approx(0.5).epsilon(1e-15));
  CHECK(score(art(0.2, 0.7), "p", VerifierSpec::aesthetic_like(0.0), 1) == 0.7);
  const auto vlm = VerifierSpec::binary(0.6);
  CHECK(score(art(0.59, 0), "p", vlm, 1) == 0.0);
  CHECK(score(art(0.60, 0), "p", vlm, 1) == 1.0);
  CHECK_THROWS_AS(score(art(0.5, 0.5), "p", VerifierSpec::remote("r"), 1), std::logic_error);
}

TEST_CASE("noise is seeded, zero-mean and has the configured spread") {
  const auto spec = VerifierSpec::clip_like(0.05);
  CHECK(score(art(0.5, 0), "p", spec, 9) == score(art(0.5, 0), "p", spec, 9));
  constexpr int n = 20000;
  double sum = 0, sq = 0;
  for (int i = 0; i < n; ++i) {
    const double e = score(art(0.5, 0), "p", spec, derive_seed(1, 1, i, 0)) - 0.5;
    sum += e;
    sq += e * e;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  CHECK(std::abs(mean) <= 3 * 0.05 / std::sqrt(n));
  CHECK(std::sqrt(var) == doctest::Approx(0.05).epsilon(0.03));
}

TEST_CASE("noise seed depends on tokens, verifier and base") {
  const std::vector<Token> a{1, 2, 3}, b{1, 2, 4};
  CHECK(noise_seed(a, "clip", 0) == noise_seed(a, "clip", 0));
  CHECK(noise_seed(a, "clip", 0) != noise_seed(b, "clip", 0));
  CHECK(noise_seed(a, "clip", 0) != noise_seed(a, "aesthetic", 0));
  CHECK(noise_seed(a, "clip", 0) != noise_seed(a, "clip", 1));
}

TEST_CASE("binary verifier emits only 0 or 1") {
  const auto spec = VerifierSpec::binary(0.3);
  for (int i = 0; i <= 100; ++i) {
    const double s = score(art(i / 100.0, 0.5), "p", spec, i);
    REQUIRE((s == 0.0 || s == 1.0));
  }
}

TEST_CASE("spec validation") {
  auto bad = VerifierSpec::clip_like();
  bad.alignment_weight = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = VerifierSpec::clip_like(-0.1);
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  CHECK_THROWS_AS(VerifierSpec::binary(1.5).validate(), std::invalid_argument);
  CHECK_NOTHROW(VerifierSpec::preference_like(0.05).validate());
  CHECK(verifier_kind_from_string(to_string(VerifierKind::preference)) == VerifierKind::preference);
  CHECK_THROWS_AS(verifier_kind_from_string("clipish"), std::invalid_argument);
}

TEST_CASE("mean ranks share tied positions") {
  const std::vector<double> s{0.9, 0.5, 0.5, 0.1};
  CHECK(mean_ranks(s) == std::vector<double>{1.0, 2.5, 2.5, 4.0});
  const std::vector<double> all{3, 3, 3};
  CHECK(mean_ranks(all) == std::vector<double>{2.0, 2.0, 2.0});
}

TEST_CASE("ensemble select examples") {
  const std::vector<std::string> ids{"v1", "v2"};
  auto one = two_columns({0.3}, {0.2});
  CHECK(ensemble_select(one, ids, "v1") == 0);
  CHECK(one[0].avg_rank == 1.0);

  auto three = two_columns({0.9, 0.5, 0.1}, {0.1, 0.5, 0.9});
  CHECK(ensemble_select(three, ids, "v1") == 0);
  for (const auto& c : three) CHECK(*c.avg_rank == 2.0);
  CHECK(ensemble_select(three, ids, "v2") == 2);

  auto missing = candidates({{{"v1", 1.0}}});
  CHECK_THROWS_AS(ensemble_select(missing, ids, "v1"), std::invalid_argument);
  std::vector<ScoredCandidate> none;
  CHECK_THROWS_AS(ensemble_select(none, ids, "v1"), std::invalid_argument);
}

TEST_CASE("ensemble selection ignores monotone transforms of any column") {
  SplitMix64 rng(17);
  const std::vector<std::string> ids{"v1", "v2"};
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + rng.next_below(8);
    std::vector<double> v1(n), v2(n);
    for (std::size_t i = 0; i < n; ++i) {
      v1[i] = static_cast<double>(rng.next_below(5));  // deliberate ties
      v2[i] = rng.next_unit();
    }
    auto base = two_columns(v1, v2);
    std::vector<double> t1(n), t2(n);
    for (std::size_t i = 0; i < n; ++i) {
      t1[i] = std::exp(3 * v1[i]) - 7;
      t2[i] = std::pow(v2[i], 3) * 100;
    }
    auto moved = two_columns(t1, t2);
    REQUIRE(ensemble_select(base, ids, "v1") == ensemble_select(moved, ids, "v1"));
  }
}

TEST_CASE("binary select with tiebreak examples") {
  auto cols = [](std::vector<double> b, std::vector<double> s) {
    std::vector<std::map<std::string, double>> out;
    for (std::size_t i = 0; i < b.size(); ++i) out.push_back({{"vlm", b[i]}, {"ir", s[i]}});
    return candidates(out);
  };
  CHECK(binary_select_with_tiebreak(cols({0, 0, 0}, {0.1, 0.9, 0.5}), "vlm", "ir") == 1);
  CHECK(binary_select_with_tiebreak(cols({1, 0, 1}, {0.2, 0.9, 0.3}), "vlm", "ir") == 2);
  CHECK(binary_select_with_tiebreak(cols({1, 1, 1}, {0.4, 0.4, 0.4}), "vlm", "ir") == 0);
}

TEST_CASE("single-verifier selection is invariant under positive affine maps") {
  SplitMix64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.next_below(10);
    std::vector<std::map<std::string, double>> a, b;
    for (std::size_t i = 0; i < n; ++i) {
      const double s = rng.next_unit();
      a.push_back({{"clip", s}});
      b.push_back({{"clip", 4.5 * s - 2.0}});
    }
    auto ca = candidates(a), cb = candidates(b);
    const auto rule = SelectionRule::single("clip");
    REQUIRE(rank_order(ca, rule).front() == rank_order(cb, rule).front());
  }
}

TEST_CASE("selection commutes with permutation when scores are distinct") {
  SplitMix64 rng(23);
  const std::vector<std::string> ids{"v1", "v2"};
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.next_below(8);
    std::vector<double> v1(n), v2(n);
    for (std::size_t i = 0; i < n; ++i) {
      v1[i] = rng.next_unit();
      v2[i] = rng.next_unit();
    }
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<double> p1(n), p2(n);
    for (std::size_t i = 0; i < n; ++i) {
      p1[i] = v1[perm[i]];
      p2[i] = v2[perm[i]];
    }
    auto base = two_columns(v1, v2);
    auto shuffled = two_columns(p1, p2);
    // Ensemble ties among distinct scores are still possible; the primary
    // tiebreak resolves them by v1, which is distinct.
    REQUIRE(perm[ensemble_select(shuffled, ids, "v1")] == ensemble_select(base, ids, "v1"));
    const auto rule = SelectionRule::single("v2");
    REQUIRE(perm[rank_order(shuffled, rule).front()] == rank_order(base, rule).front());
  }
}

TEST_CASE("rank order keeps the lower index on full ties") {
  auto c = candidates({{{"clip", 1.2}}, {{"clip", 1.2}}, {{"clip", 1.3}}});
  CHECK(rank_order(c, SelectionRule::single("clip")) == std::vector<std::size_t>{2, 0, 1});
}

TEST_CASE("selection rule primary and labels") {
  CHECK(SelectionRule::single("clip").primary() == "clip");
  CHECK(SelectionRule::ensemble({"clip", "aesthetic"}, "aesthetic").primary() == "aesthetic");
  CHECK(SelectionRule::binary("vlm", "imagereward").primary() == "imagereward");
  CHECK(SelectionRule::single("clip").label() != SelectionRule::single("aesthetic").label());
}

TEST_CASE("roster lookups") {
  const std::vector<VerifierSpec> specs{VerifierSpec::clip_like(), VerifierSpec::aesthetic_like()};
  auto roster = VerifierRoster::synthetic(specs);
  CHECK(roster.size() == 2);
  CHECK(roster.contains("clip"));
  CHECK_FALSE(roster.contains("vlm"));
  CHECK(roster.at("aesthetic").spec().kind == VerifierKind::quality);
  CHECK_THROWS(roster.at("vlm"));
  CHECK_THROWS(roster.add(std::make_shared<SyntheticVerifier>(VerifierSpec::clip_like())));
}

TEST_CASE("cost profile of a synthetic verifier") {
  SyntheticVerifier v(VerifierSpec::clip_like(0.05));
  std::vector<Artifact> samples{art(0.1, 0.2, {1, 2}), art(0.3, 0.4, {3, 4})};
  const auto profile = cost_profile(v, samples, "p", 200);
  CHECK(profile.verifier_id == "clip");
  CHECK(profile.calls == 200);
  CHECK(profile.median_latency.count() > 0);
  CHECK_THROWS_AS(cost_profile(v, samples, "p", 50), std::invalid_argument);
}
