#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "oai/aggregate.hpp"
#include "oai/stats.hpp"

namespace oai {

enum class ExposureCategory { High, Medium, Low };

inline const char* category_name(ExposureCategory c) {
  switch (c) {
    case ExposureCategory::High: return "high";
    case ExposureCategory::Medium: return "medium";
    case ExposureCategory::Low: return "low";
  }
  return "low";
}

// High: oai >= 0.60, Medium: 0.30 <= oai < 0.60, Low: oai < 0.30.
// Lower bounds inclusive; comparisons are exact, never on printed strings.
inline ExposureCategory categorize(const Rational& oai) {
  if (oai < Rational(0) || oai > Rational(1)) throw ComputeError("oai outside [0,1]");
  if (oai >= Rational(3, 5)) return ExposureCategory::High;
  if (oai >= Rational(3, 10)) return ExposureCategory::Medium;
  return ExposureCategory::Low;
}

struct RankedOccupation {
  int rank = 0;          // 1-based position, ties ordered by ascending soc_code
  double avg_rank = 0;   // average rank across OAI ties, for correlation use
  std::string soc_code;
  std::string title;
  Rational oai;
  ExposureCategory category = ExposureCategory::Low;
};

inline std::vector<RankedOccupation> rank_occupations(const OaiTable& table) {
  if (table.records.empty()) throw ComputeError("rank_occupations: empty table");
  std::vector<const OaiRecord*> order;
  order.reserve(table.records.size());
  for (const auto& rec : table.records) order.push_back(&rec);
  std::sort(order.begin(), order.end(), [](const OaiRecord* a, const OaiRecord* b) {
    if (a->oai != b->oai) return b->oai < a->oai;  // descending OAI
    return a->soc_code < b->soc_code;
  });
  std::vector<RankedOccupation> ranked(order.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && order[j + 1]->oai == order[i]->oai) ++j;
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) {
      ranked[k].rank = static_cast<int>(k + 1);
      ranked[k].avg_rank = avg;
      ranked[k].soc_code = order[k]->soc_code;
      ranked[k].title = order[k]->title;
      ranked[k].oai = order[k]->oai;
      ranked[k].category = categorize(order[k]->oai);
    }
    i = j + 1;
  }
  return ranked;
}

struct SummaryStats {
  std::string scenario;
  std::size_t total = 0;
  std::map<std::string, std::size_t> counts;  // high/medium/low
  std::map<std::string, double> shares;
  double min = 0, max = 0, mean = 0;
  std::vector<double> deciles;  // p10..p90, linear interpolation
};

inline SummaryStats summary(const OaiTable& table) {
  if (table.records.empty()) throw ComputeError("summary: empty table");
  SummaryStats s;
  s.scenario = table.scenario;
  s.total = table.records.size();
  s.counts = {{"high", 0}, {"medium", 0}, {"low", 0}};
  std::vector<double> values;
  values.reserve(s.total);
  for (const auto& rec : table.records) {
    s.counts[category_name(categorize(rec.oai))]++;
    values.push_back(rec.oai.to_double());
  }
  for (const auto& [name, count] : s.counts)
    s.shares[name] = static_cast<double>(count) / static_cast<double>(s.total);
  std::sort(values.begin(), values.end());
  s.min = values.front();
  s.max = values.back();
  s.mean = 0;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  for (int d = 1; d <= 9; ++d) {
    const double pos = static_cast<double>(d) / 10.0 * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = static_cast<std::size_t>(std::ceil(pos));
    const double frac = pos - std::floor(pos);
    s.deciles.push_back(values[lo] * (1.0 - frac) + values[hi] * frac);
  }
  return s;
}

struct RankDelta {
  std::string soc_code;
  int rank_a = 0;
  int rank_b = 0;
};

struct ScenarioComparison {
  std::string scenario_a;
  std::string scenario_b;
  double rho = 0;
  double p_value = 1;
  int n = 0;
  std::vector<RankDelta> rank_deltas;  // sorted by |rank_a - rank_b| descending
};

// Rank stability between two scenario tables over the same occupation set.
inline ScenarioComparison scenario_compare(const OaiTable& a, const OaiTable& b) {
  ScenarioComparison cmp;
  cmp.scenario_a = a.scenario;
  cmp.scenario_b = b.scenario;
  std::map<std::string, Rational> oai_a, oai_b;
  for (const auto& rec : a.records) oai_a[rec.soc_code] = rec.oai;
  for (const auto& rec : b.records) oai_b[rec.soc_code] = rec.oai;
  if (oai_a.size() != oai_b.size())
    throw ComputeError("scenario_compare: occupation sets differ in size");
  std::vector<double> va, vb;
  for (const auto& [soc, oai] : oai_a) {
    auto it = oai_b.find(soc);
    if (it == oai_b.end()) throw ComputeError("scenario_compare: occupation \"" + soc + "\" missing from second table");
    va.push_back(oai.to_double());
    vb.push_back(it->second.to_double());
  }
  cmp.n = static_cast<int>(va.size());
  const TestResult res = spearman(va, vb);
  cmp.rho = res.statistic;
  cmp.p_value = res.p_value;

  std::map<std::string, int> rank_a, rank_b;
  for (const auto& r : rank_occupations(a)) rank_a[r.soc_code] = r.rank;
  for (const auto& r : rank_occupations(b)) rank_b[r.soc_code] = r.rank;
  for (const auto& [soc, ra] : rank_a) cmp.rank_deltas.push_back({soc, ra, rank_b.at(soc)});
  std::stable_sort(cmp.rank_deltas.begin(), cmp.rank_deltas.end(), [](const RankDelta& x, const RankDelta& y) {
    return std::abs(x.rank_a - x.rank_b) > std::abs(y.rank_a - y.rank_b);
  });
  return cmp;
}

// --- File emission ------------------------------------------------------------

struct ReportFormats {
  bool csv = true;
  bool json = true;
  bool plots = true;
};

struct ReportManifest {
  struct Entry {
    std::string name;
    std::string digest;  // fnv1a64 of file bytes
  };
  std::vector<Entry> files;
  std::vector<std::string> omitted;
};

namespace detail {

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

// oai.csv rows in rank order, OAI to 4 decimals.
inline std::string render_oai_csv(const OaiTable& table) {
  std::string out = "soc_code,title,oai,scenario\n";
  for (const auto& r : rank_occupations(table))
    out += csv_row({r.soc_code, r.title, r.oai.to_decimal_string(4), table.scenario});
  return out;
}

inline std::string render_summary_json(const OaiTable& table) {
  const SummaryStats s = summary(table);
  nlohmann::json doc;
  doc["scenario"] = s.scenario;
  doc["total"] = s.total;
  doc["counts"] = {{"high", s.counts.at("high")}, {"medium", s.counts.at("medium")}, {"low", s.counts.at("low")}};
  doc["shares"] = {{"high", s.shares.at("high")}, {"medium", s.shares.at("medium")}, {"low", s.shares.at("low")}};
  doc["distribution"] = {{"min", s.min}, {"max", s.max}, {"mean", s.mean}, {"deciles", s.deciles}};
  return doc.dump(2) + "\n";
}

inline std::string render_sensitivity_json(const std::vector<ScenarioComparison>& comparisons) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& cmp : comparisons) {
    nlohmann::json movers = nlohmann::json::array();
    std::size_t limit = std::min<std::size_t>(10, cmp.rank_deltas.size());
    for (std::size_t i = 0; i < limit; ++i) {
      const auto& d = cmp.rank_deltas[i];
      movers.push_back({{"soc_code", d.soc_code}, {"rank_a", d.rank_a}, {"rank_b", d.rank_b}});
    }
    arr.push_back({{"a", cmp.scenario_a},
                   {"b", cmp.scenario_b},
                   {"rho", cmp.rho},
                   {"p", cmp.p_value},
                   {"n", cmp.n},
                   {"top_movers", movers}});
  }
  return arr.dump(2) + "\n";
}

inline std::string render_table2_csv(const HitlSummary& hitl) {
  std::string out = "stratum,n,ai_mean,tech_mean,mgmt_mean\n";
  const Stratum strata[] = {Stratum::Consensus, Stratum::SlightFriction, Stratum::SevereDivergence};
  for (std::size_t s = 0; s < 3; ++s) {
    std::array<std::string, 3> means{"", "", ""};
    for (std::size_t c = 0; c < 3; ++c)
      if (hitl.grid[s][c]) means[c] = fmt(hitl.grid[s][c]->mean_risk);
    out += csv_row({stratum_name(strata[s]), std::to_string(hitl.dwa_counts[s]), means[0], means[1], means[2]});
  }
  return out;
}

inline std::string svg_header(int w, int h) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(w) + "\" height=\"" +
         std::to_string(h) + "\" viewBox=\"0 0 " + std::to_string(w) + " " + std::to_string(h) + "\">\n";
}

// Histogram of the OAI distribution, 20 bins over [0,1].
inline std::string render_density_svg(const OaiTable& table) {
  std::array<int, 20> bins{};
  for (const auto& rec : table.records) {
    auto b = static_cast<std::size_t>(rec.oai.to_double() * 20.0);
    if (b >= bins.size()) b = bins.size() - 1;
    bins[b]++;
  }
  int max_count = 1;
  for (int c : bins) max_count = std::max(max_count, c);
  const int w = 640, h = 360, pad = 40;
  std::string svg = svg_header(w, h);
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"20\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">OAI distribution (" +
         table.scenario + ", n=" + std::to_string(table.records.size()) + ")</text>\n";
  const double bw = static_cast<double>(w - 2 * pad) / 20.0;
  for (std::size_t i = 0; i < bins.size(); ++i) {
    const double bh = static_cast<double>(bins[i]) / max_count * (h - 2 * pad);
    svg += "<rect x=\"" + fmt(pad + static_cast<double>(i) * bw) + "\" y=\"" + fmt(h - pad - bh) +
           "\" width=\"" + fmt(bw - 1.0) + "\" height=\"" + fmt(bh) + "\" fill=\"#4472a8\"/>\n";
  }
  svg += "<line x1=\"" + fmt(pad) + "\" y1=\"" + fmt(h - pad) + "\" x2=\"" + fmt(w - pad) + "\" y2=\"" +
         fmt(h - pad) + "\" stroke=\"black\"/>\n";
  svg += "<text x=\"" + fmt(pad) + "\" y=\"" + fmt(h - pad + 16) + "\" font-family=\"sans-serif\" font-size=\"10\">0.0</text>\n";
  svg += "<text x=\"" + fmt(w - pad - 10) + "\" y=\"" + fmt(h - pad + 16) + "\" font-family=\"sans-serif\" font-size=\"10\">1.0</text>\n";
  svg += "</svg>\n";
  return svg;
}

// 4x5 automation-index heatmap of the scenario's mapping matrix.
inline std::string render_heatmap_svg(const MappingMatrix& m) {
  const int cell = 80, pad = 60;
  const int w = pad + 5 * cell + 20, h = pad + 4 * cell + 20;
  std::string svg = svg_header(w, h);
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"20\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">Mapping matrix: " + m.name + "</text>\n";
  for (int t = 0; t <= 3; ++t) {
    for (int r = 1; r <= 5; ++r) {
      const double v = m.at(t, r).to_double();
      const int red = static_cast<int>(255.0 * (1.0 - v));
      const int green = static_cast<int>(220.0 * v + 30.0 * (1.0 - v));
      const int x = pad + (r - 1) * cell;
      const int y = pad + (3 - t) * cell;  // T=3 on top
      svg += "<rect x=\"" + std::to_string(x) + "\" y=\"" + std::to_string(y) + "\" width=\"" +
             std::to_string(cell - 2) + "\" height=\"" + std::to_string(cell - 2) + "\" fill=\"rgb(" +
             std::to_string(red) + "," + std::to_string(green) + ",90)\"/>\n";
      svg += "<text x=\"" + std::to_string(x + cell / 2 - 14) + "\" y=\"" + std::to_string(y + cell / 2 + 4) +
             "\" font-family=\"sans-serif\" font-size=\"12\">" + m.at(t, r).to_decimal_string(2) + "</text>\n";
    }
  }
  for (int r = 1; r <= 5; ++r)
    svg += "<text x=\"" + std::to_string(pad + (r - 1) * cell + cell / 2 - 12) + "\" y=\"" + std::to_string(pad - 8) +
           "\" font-family=\"sans-serif\" font-size=\"11\">R=" + std::to_string(r) + "</text>\n";
  for (int t = 0; t <= 3; ++t)
    svg += "<text x=\"" + std::to_string(pad - 34) + "\" y=\"" + std::to_string(pad + (3 - t) * cell + cell / 2 + 4) +
           "\" font-family=\"sans-serif\" font-size=\"11\">T=" + std::to_string(t) + "</text>\n";
  svg += "</svg>\n";
  return svg;
}

// Grouped bars: mean risk per stratum for each cohort.
inline std::string render_gap_svg(const HitlSummary& hitl) {
  const int w = 640, h = 360, pad = 50;
  std::string svg = svg_header(w, h);
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"20\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">Mean risk by stratum and cohort</text>\n";
  const char* colors[3] = {"#888888", "#4472a8", "#a84444"};
  const char* labels[3] = {"consensus", "slight_friction", "severe_divergence"};
  const double group_w = static_cast<double>(w - 2 * pad) / 3.0;
  for (std::size_t s = 0; s < 3; ++s) {
    for (std::size_t c = 0; c < 3; ++c) {
      if (!hitl.grid[s][c]) continue;
      const double v = hitl.grid[s][c]->mean_risk;  // scale 1..5
      const double bh = (v / 5.0) * (h - 2 * pad);
      const double x = pad + static_cast<double>(s) * group_w + static_cast<double>(c) * (group_w / 4.0);
      svg += "<rect x=\"" + fmt(x) + "\" y=\"" + fmt(h - pad - bh) + "\" width=\"" + fmt(group_w / 4.0 - 4.0) +
             "\" height=\"" + fmt(bh) + "\" fill=\"" + colors[c] + "\"/>\n";
      svg += "<text x=\"" + fmt(x) + "\" y=\"" + fmt(h - pad - bh - 4) +
             "\" font-family=\"sans-serif\" font-size=\"10\">" + fmt(v) + "</text>\n";
    }
    svg += "<text x=\"" + fmt(pad + static_cast<double>(s) * group_w) + "\" y=\"" + fmt(h - pad + 16) +
           "\" font-family=\"sans-serif\" font-size=\"10\">" + labels[s] + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace detail

// Emits report files into out_dir and returns their manifest. Writes are
// atomic per file (temp + rename) and everything written by a failing call is
// removed again, so a failed report never leaves partial output behind.
inline ReportManifest write_report(const OaiTable& table,
                                   const std::vector<ScenarioComparison>& comparisons,
                                   const std::optional<HitlSummary>& hitl,
                                   const MappingMatrix& matrix,
                                   const std::filesystem::path& out_dir,
                                   const ReportFormats& formats = {}) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (!fs::is_directory(out_dir))
    throw IoError("output directory unavailable: " + out_dir.string());

  ReportManifest manifest;
  std::vector<fs::path> written;
  auto emit = [&](const std::string& name, const std::string& content) {
    const fs::path target = out_dir / name;
    const fs::path tmp = out_dir / (name + ".tmp");
    {
      std::ofstream out(tmp, std::ios::binary);
      if (!out) throw IoError("cannot write " + tmp.string());
      out << content;
      if (!out) throw IoError("write failed: " + tmp.string());
    }
    fs::rename(tmp, target);
    written.push_back(target);
    manifest.files.push_back({name, to_hex(fnv1a64(content))});
  };

  try {
    if (formats.csv) emit("oai.csv", detail::render_oai_csv(table));
    if (formats.json) emit("summary.json", detail::render_summary_json(table));
    if (formats.json) {
      if (comparisons.empty())
        manifest.omitted.push_back("sensitivity.json (no comparisons)");
      else
        emit("sensitivity.json", detail::render_sensitivity_json(comparisons));
    }
    if (formats.csv) {
      if (hitl)
        emit("table2.csv", detail::render_table2_csv(*hitl));
      else
        manifest.omitted.push_back("table2.csv (no HITL data)");
    }
    if (formats.plots) {
      emit("oai_density.svg", detail::render_density_svg(table));
      emit("matrix_heatmap.svg", detail::render_heatmap_svg(matrix));
      if (hitl) emit("hitl_gap.svg", detail::render_gap_svg(*hitl));
    }
  } catch (...) {
    for (const auto& p : written) fs::remove(p, ec);
    throw;
  }
  return manifest;
}

// Reads an oai.csv back into a table (used for compare-only sensitivity runs).
inline OaiTable read_oai_csv(const std::filesystem::path& path) {
  auto records = read_csv_file(path);
  const std::string file = path.filename().string();
  if (records.empty() || records.front().fields != std::vector<std::string>{"soc_code", "title", "oai", "scenario"})
    throw ValidationError(file + ": expected header \"soc_code,title,oai,scenario\"");
  OaiTable table;
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto& rec = records[i];
    if (rec.fields.size() != 4)
      throw ValidationError(file + ":" + std::to_string(rec.line) + ": expected 4 columns");
    OaiRecord r;
    r.soc_code = rec.fields[0];
    r.title = rec.fields[1];
    r.oai = Rational::from_decimal(rec.fields[2]);
    table.scenario = rec.fields[3];
    table.records.push_back(std::move(r));
  }
  std::sort(table.records.begin(), table.records.end(),
            [](const OaiRecord& a, const OaiRecord& b) { return a.soc_code < b.soc_code; });
  return table;
}

}  // namespace oai
