// SPDX-License-Identifier: Apache-2.0
#include "scalesearch/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace scalesearch::report {

namespace {

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    out.emplace_back(text.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string join(std::span<const std::string> parts, char sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

bool needs_quotes(std::string_view cell) {
  return cell.find_first_of(",\"\n\r") != std::string_view::npos;
}

void write_cell(std::string& out, std::string_view cell) {
  if (!needs_quotes(cell)) {
    out += cell;
    return;
  }
  out += '"';
  for (const char ch : cell) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
}

std::string xml_escape(std::string_view text) {
  std::string out;
  for (const char ch : text) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

}  // namespace

std::size_t CsvTable::column(std::string_view name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw std::invalid_argument("no CSV column '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - header.begin());
}

std::string write_csv(const CsvTable& table) {
  std::string out;
  auto emit = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      write_cell(out, row[i]);
    }
    out += '\n';
  };
  emit(table.header);
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size()) throw std::invalid_argument("ragged CSV row");
    emit(row);
  }
  return out;
}

CsvTable parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string cell;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    any = true;
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          cell += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      record.push_back(std::move(cell));
      cell.clear();
    } else if (ch == '\n' || ch == '\r') {
      if (ch == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      record.push_back(std::move(cell));
      cell.clear();
      records.push_back(std::move(record));
      record.clear();
      any = false;
    } else {
      cell += ch;
    }
  }
  if (quoted) throw std::invalid_argument("unterminated quoted CSV cell");
  if (any) {
    record.push_back(std::move(cell));
    records.push_back(std::move(record));
  }
  if (records.empty()) throw std::invalid_argument("CSV has no header");
  CsvTable table;
  table.header = std::move(records.front());
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != table.header.size()) throw std::invalid_argument("ragged CSV row");
    table.rows.push_back(std::move(records[r]));
  }
  return table;
}

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

CsvTable empty_table(std::string_view columns) { return CsvTable{split(columns, ','), {}}; }

// ---------------------------------------------------------------------------
// JSON

json to_json(const BudgetLedger& l) {
  return {{"nfes", l.nfes},
          {"images_verified", l.images_verified},
          {"verifier_calls", l.verifier_calls},
          {"cache_hits", l.cache_hits},
          {"cache_misses", l.cache_misses}};
}

BudgetLedger ledger_from_json(const json& j) {
  BudgetLedger l;
  l.nfes = j.at("nfes").get<std::uint64_t>();
  l.images_verified = j.at("images_verified").get<std::uint64_t>();
  l.verifier_calls = j.at("verifier_calls").get<std::uint64_t>();
  l.cache_hits = j.at("cache_hits").get<std::uint64_t>();
  l.cache_misses = j.at("cache_misses").get<std::uint64_t>();
  return l;
}

json to_json(const SelectionRule& rule) {
  json j;
  switch (rule.kind) {
    case SelectionRule::Kind::single:
      j = {{"rule", "single"}, {"verifier", rule.verifiers.at(0)}};
      break;
    case SelectionRule::Kind::ensemble:
      j = {{"rule", "ensemble"}, {"verifiers", rule.verifiers}, {"tiebreak", rule.tiebreak}};
      break;
    case SelectionRule::Kind::binary:
      j = {{"rule", "binary"}, {"binary", rule.verifiers.at(0)}, {"secondary", rule.verifiers.at(1)}};
      break;
  }
  return j;
}

json to_json(const SearchConfig& c) {
  json j = {{"strategy", std::string(to_string(c.strategy))},
            {"label", c.label()},
            {"temperature", c.temperature},
            {"root_seed", c.root_seed},
            {"selection", to_json(c.selection)},
            {"cache", c.use_cache}};
  switch (c.strategy) {
    case Strategy::random: j["n"] = c.n; break;
    case Strategy::gto: j["c"] = c.c; break;
    case Strategy::beam:
      j["w"] = c.w;
      j["c"] = c.c;
      break;
    case Strategy::dynamic_gto:
      j["total_slots"] = c.total_slots;
      j["pilot_c"] = c.pilot_c;
      break;
  }
  return j;
}

json to_json(const ScoredCandidate& c) {
  json j = {{"lineage", {{"root_seed", c.sequence.lineage().root()},
                         {"branches", std::vector<std::uint32_t>(c.sequence.lineage().branches().begin(),
                                                                 c.sequence.lineage().branches().end())}}},
            {"tokens", c.artifact.tokens},
            {"alignment", c.artifact.alignment},
            {"quality", c.artifact.quality},
            {"scores", c.scores},
            {"order", c.order}};
  if (c.avg_rank) j["avg_rank"] = *c.avg_rank;
  return j;
}

json to_json(const StepRecord& s) {
  std::vector<std::string> candidates, kept;
  for (const auto& l : s.candidates) candidates.push_back(to_string(l));
  for (const auto& l : s.kept) kept.push_back(to_string(l));
  return {{"phase", s.phase},   {"scale", s.scale},       {"slots", s.slots},
          {"scores", s.scores}, {"variance", s.variance}, {"candidates", candidates},
          {"kept", kept},       {"ledger", to_json(s.ledger)}};
}

json to_json(const SearchResult& r) {
  json j = {{"config", to_json(r.config)},
            {"best", to_json(r.best)},
            {"ledger", to_json(r.ledger)}};
  json trace = json::array();
  for (const auto& s : r.trace) trace.push_back(to_json(s));
  j["trace"] = std::move(trace);
  if (!r.all_verified.empty()) {
    json all = json::array();
    for (const auto& c : r.all_verified) all.push_back(to_json(c));
    j["all_verified"] = std::move(all);
  }
  return j;
}

json to_json(const ScalingCurve& curve) {
  json points = json::array();
  for (const auto& p : curve.points) points.push_back({{"k", p.k}, {"e_max", p.e_max}, {"std", p.std}});
  return {{"verifier", curve.verifier_id},
          {"points", points},
          {"fit", {{"alpha", curve.fit.alpha}, {"beta", curve.fit.beta}, {"r_squared", curve.fit.r_squared}}}};
}

json to_json(const ComparisonReport& report) {
  json rows = json::array();
  for (const auto& row : report.rows) {
    json metrics = json::object();
    for (const auto& m : row.metrics) {
      metrics[m.metric] = {{"mean", m.mean}, {"std", m.std}, {"count", m.count}};
    }
    rows.push_back({{"config", row.label},
                    {"strategy", std::string(to_string(row.config.strategy))},
                    {"selection", row.selection},
                    {"images", row.images},
                    {"nfes", row.nfes},
                    {"metrics", metrics}});
  }
  return {{"temperature", report.temperature},
          {"trials", report.trials},
          {"eval_metrics", report.eval_metrics},
          {"rows", rows}};
}

json to_json(const CostProfile& p) {
  return {{"verifier", p.verifier_id},
          {"calls", p.calls},
          {"median_latency_us", static_cast<double>(p.median_latency.count()) / 1000.0},
          {"peak_memory_bytes", p.peak_memory_bytes}};
}

// ---------------------------------------------------------------------------
// CSV rows

void append_ledger_row(CsvTable& table, std::size_t prompt_index, std::string_view prompt,
                       std::string_view config, const BudgetLedger& l) {
  table.rows.push_back({std::to_string(prompt_index), std::string(prompt), std::string(config),
                        std::to_string(l.nfes), std::to_string(l.images_verified),
                        std::to_string(l.verifier_calls), std::to_string(l.cache_hits),
                        std::to_string(l.cache_misses)});
}

void append_trace_rows(CsvTable& table, std::size_t prompt_index,
                       std::span<const StepRecord> trace) {
  for (const auto& s : trace) {
    std::vector<std::string> kept, scores;
    for (const auto& l : s.kept) kept.push_back(to_string(l));
    for (const double v : s.scores) scores.push_back(format_number(v));
    table.rows.push_back({std::to_string(prompt_index), s.phase, std::to_string(s.scale),
                          std::to_string(s.slots), format_number(s.variance),
                          std::to_string(s.ledger.nfes), std::to_string(s.ledger.images_verified),
                          join(kept, ';'), join(scores, ';')});
  }
}

CsvTable scaling_table(std::span<const ScalingCurve> curves) {
  auto table = empty_table(kScalingColumns);
  for (const auto& c : curves) {
    for (const auto& p : c.points) {
      table.rows.push_back({c.verifier_id, std::to_string(p.k), format_number(p.e_max),
                            format_number(p.std)});
    }
  }
  return table;
}

CsvTable fit_table(std::span<const ScalingCurve> curves) {
  auto table = empty_table(kFitColumns);
  for (const auto& c : curves) {
    table.rows.push_back({c.verifier_id, format_number(c.fit.alpha), format_number(c.fit.beta),
                          format_number(c.fit.r_squared)});
  }
  return table;
}

void append_bench_rows(CsvTable& table, const ComparisonReport& report) {
  for (const auto& row : report.rows) {
    for (const auto& m : row.metrics) {
      table.rows.push_back({format_number(report.temperature), row.label,
                            std::string(to_string(row.config.strategy)), row.selection,
                            format_number(row.images), format_number(row.nfes), m.metric,
                            format_number(m.mean), format_number(m.std), std::to_string(m.count)});
    }
  }
}

CsvTable bench_matrix(std::span<const ComparisonReport> reports) {
  CsvTable table;
  table.header = {"temperature", "config", "selection", "images", "nfes"};
  if (!reports.empty()) {
    for (const auto& m : reports.front().eval_metrics) {
      table.header.push_back(m + "_mean");
      table.header.push_back(m + "_std");
    }
  }
  for (const auto& report : reports) {
    for (const auto& row : report.rows) {
      std::vector<std::string> cells{format_number(report.temperature), row.label, row.selection,
                                     format_number(row.images), format_number(row.nfes)};
      for (const auto& m : row.metrics) {
        cells.push_back(format_number(m.mean));
        cells.push_back(format_number(m.std));
      }
      table.rows.push_back(std::move(cells));
    }
  }
  return table;
}

void append_cost_row(CsvTable& table, const CostProfile& p, std::string_view kind) {
  table.rows.push_back({p.verifier_id, std::string(kind), std::to_string(p.calls),
                        format_number(static_cast<double>(p.median_latency.count()) / 1000.0),
                        std::to_string(p.peak_memory_bytes)});
}

// ---------------------------------------------------------------------------
// SVG

std::string scaling_svg(std::span<const ScalingCurve> curves, std::string_view title) {
  constexpr double width = 640, height = 400;
  constexpr double left = 70, right = 150, top = 40, bottom = 50;
  const double plot_w = width - left - right;
  const double plot_h = height - top - bottom;
  static constexpr const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                           "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

  double kmax = 1, ymin = INFINITY, ymax = -INFINITY;
  for (const auto& c : curves) {
    for (const auto& p : c.points) {
      kmax = std::max(kmax, static_cast<double>(p.k));
      ymin = std::min(ymin, p.e_max);
      ymax = std::max(ymax, p.e_max);
    }
  }
  if (!std::isfinite(ymin)) ymin = 0, ymax = 1;
  if (ymax - ymin < 1e-12) ymin -= 0.5, ymax += 0.5;
  const double xspan = std::max(std::log10(kmax), 1e-9);
  auto px = [&](double k) { return left + plot_w * std::log10(k) / xspan; };
  auto py = [&](double y) { return top + plot_h * (1.0 - (y - ymin) / (ymax - ymin)); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << xml_escape(title)
      << "</text>\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\"" << left + plot_w
      << "\" y2=\"" << top + plot_h << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\""
      << top + plot_h << "\" stroke=\"black\"/>\n";
  for (double k = 1; k <= kmax * 1.0001; k *= 10) {
    svg << "<line x1=\"" << px(k) << "\" y1=\"" << top + plot_h << "\" x2=\"" << px(k) << "\" y2=\""
        << top + plot_h + 5 << "\" stroke=\"black\"/>";
    svg << "<text x=\"" << px(k) << "\" y=\"" << top + plot_h + 18 << "\" text-anchor=\"middle\">"
        << k << "</text>\n";
  }
  for (int i = 0; i <= 4; ++i) {
    const double y = ymin + (ymax - ymin) * i / 4.0;
    svg << "<text x=\"" << left - 6 << "\" y=\"" << py(y) + 4 << "\" text-anchor=\"end\">"
        << format_number(std::round(y * 1000) / 1000) << "</text>\n";
  }
  svg << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << height - 12
      << "\" text-anchor=\"middle\">budget k (log scale)</text>\n";
  svg << "<text x=\"16\" y=\"" << top + plot_h / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << top + plot_h / 2 << ")\">expected max score</text>\n";

  for (std::size_t i = 0; i < curves.size(); ++i) {
    const auto* color = colors[i % std::size(colors)];
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (const auto& p : curves[i].points) svg << px(p.k) << ',' << py(p.e_max) << ' ';
    svg << "\"/>\n";
    const double ly = top + 16.0 * static_cast<double>(i);
    svg << "<line x1=\"" << left + plot_w + 12 << "\" y1=\"" << ly << "\" x2=\"" << left + plot_w + 32
        << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>";
    svg << "<text x=\"" << left + plot_w + 36 << "\" y=\"" << ly + 4 << "\">" << xml_escape(curves[i].verifier_id)
        << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace scalesearch::report
