// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <limits>

#include "scalesearch/report.hpp"

using namespace scalesearch;
using namespace scalesearch::report;

TEST_CASE("csv round-trips awkward cells") {
  CsvTable t{{"a", "b", "c"},
             {{"plain", "with,comma", "with \"quotes\""},
              {"multi\nline", "", "crlf\r\nend"},
              {"ünïcødé", " lead", "trail "}}};
  const auto text = write_csv(t);
  CHECK(parse_csv(text) == t);
  CHECK(parse_csv(write_csv(parse_csv(text))) == t);
}

TEST_CASE("csv writer and parser errors") {
  CsvTable ragged{{"a", "b"}, {{"1"}}};
  CHECK_THROWS_AS(write_csv(ragged), std::invalid_argument);
  CHECK_THROWS_AS(parse_csv("a,b\n1\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_csv("a,b\n\"open,2\n"), std::invalid_argument);
  CHECK(parse_csv("a,b\n1,2\n").column("b") == 1);
  CHECK_THROWS_AS(parse_csv("a,b\n1,2\n").column("z"), std::invalid_argument);
}

TEST_CASE("format_number is the shortest round-tripping text") {
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(13) == "13");
  CHECK(format_number(-2.5) == "-2.5");
  SplitMix64 rng(2);
  for (int i = 0; i < 10000; ++i) {
    const double x = (rng.next_unit() - 0.5) * std::pow(10.0, static_cast<int>(rng.next_below(20)) - 10);
    REQUIRE(std::stod(format_number(x)) == x);
  }
}

TEST_CASE("ledger json round trip") {
  const BudgetLedger l{1365, 195, 390, 7, 1365};
  CHECK(ledger_from_json(to_json(l)) == l);
  CHECK(ledger_from_json(json::parse(to_json(l).dump())) == l);
  CHECK(to_json(l).at("nfes") == 1365);
}

TEST_CASE("cost profile json survives serialization unchanged") {
  CostProfile p{"clip", 200, std::chrono::nanoseconds(1234), 4096};
  const auto j = to_json(p);
  CHECK(json::parse(j.dump()) == j);
  CHECK(j.at("median_latency_us") == 1.234);
  auto table = empty_table(kCostColumns);
  append_cost_row(table, p, "alignment");
  CHECK(parse_csv(write_csv(table)) == table);
  CHECK(table.rows[0][table.column("verifier")] == "clip");
}

TEST_CASE("emitted tables follow their schemas and round-trip") {
  auto sched = std::make_shared<const ScaleSchedule>(ScaleSchedule::tiny());
  const PlantedTask task = PlantedTask::make(*sched, "a, \"quoted\" prompt", 1, 2.0);
  SyntheticGenerator gen(sched, task);
  auto roster = VerifierRoster::synthetic(std::vector<VerifierSpec>{VerifierSpec::clip_like(0.05)});
  SearchEnvironment env{gen, roster, task.prompt, 3};
  const auto result = run_search(SearchConfig::beam(2, 2), env);

  auto ledger = empty_table(kLedgerColumns);
  append_ledger_row(ledger, 0, task.prompt, "beam(w=2,c=2)", result.ledger);
  CHECK(ledger.header.size() == 8);
  CHECK(parse_csv(write_csv(ledger)) == ledger);
  CHECK(ledger.rows[0][ledger.column("nfes")] == "24");

  auto trace = empty_table(kTraceColumns);
  append_trace_rows(trace, 0, result.trace);
  CHECK(trace.rows.size() == 3);
  CHECK(parse_csv(write_csv(trace)) == trace);

  ScalingCurve curve{"clip", {{1, 0.5, 0.1}, {2, 0.6, 0.1}, {4, 0.7, 0.05}}, {0.14, 0.5, 0.99}};
  const std::vector<ScalingCurve> curves{curve};
  const auto st = scaling_table(curves);
  CHECK(write_csv(st).substr(0, kScalingColumns.size()) == kScalingColumns);
  CHECK(parse_csv(write_csv(st)) == st);
  const auto ft = fit_table(curves);
  CHECK(ft.rows.size() == 1);
  CHECK(std::stod(ft.rows[0][ft.column("r_squared")]) == 0.99);
  const auto svg = scaling_svg(curves, "title <&>");
  CHECK(svg.find("<svg") == 0);
  CHECK(svg.find("polyline") != std::string::npos);
  CHECK(svg.find("title &lt;&amp;&gt;") != std::string::npos);

  ComparisonReport rep;
  rep.temperature = 2.0;
  rep.trials = 3;
  rep.eval_metrics = {"alignment"};
  ComparisonRow row;
  row.label = "random(n=2)";
  row.config = SearchConfig::random(2);
  row.selection = "clip";
  row.images = 2;
  row.nfes = 26;
  row.metrics = {{"alignment", 0.5, 0.1, 3}};
  rep.rows = {row};
  auto bench = empty_table(kBenchColumns);
  append_bench_rows(bench, rep);
  CHECK(parse_csv(write_csv(bench)) == bench);
  CHECK(bench.rows[0][bench.column("nfes")] == "26");
  CHECK(bench.rows[0][bench.column("temperature")] == "2");
  const std::vector<ComparisonReport> reps{rep, rep};
  const auto matrix = bench_matrix(reps);
  CHECK(matrix.header.back() == "alignment_std");
  CHECK(matrix.rows.size() == 2);
  CHECK(parse_csv(write_csv(matrix)) == matrix);
}

TEST_CASE("search result json carries the selected sequence and ledger") {
  auto sched = std::make_shared<const ScaleSchedule>(ScaleSchedule::desk_default());
  const PlantedTask task = PlantedTask::make(*sched, "p", 1, 3.0);
  SyntheticGenerator gen(sched, task);
  auto roster = VerifierRoster::synthetic(std::vector<VerifierSpec>{VerifierSpec::clip_like(0.05)});
  SearchEnvironment env{gen, roster, task.prompt, 3};
  const auto result = run_search(SearchConfig::gto(2), env);
  const auto j = to_json(result);
  CHECK(ledger_from_json(j.at("ledger")) == result.ledger);
  CHECK(j.at("best").at("tokens").get<std::vector<Token>>() == result.best.artifact.tokens);
  CHECK(j.at("trace").size() == 13);
  CHECK(j.at("config").at("strategy") == "gto");
}
