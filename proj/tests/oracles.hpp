#pragma once

// Test-only oracles: deliberately naive, straight-line reimplementations that
// share no code with the library paths they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace oracle {

// --- naive CSV split (fixture files carry no quoted commas) -------------------

inline std::vector<std::vector<std::string>> split_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ls(line);
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (line.empty()) continue;
    if (!line.empty() && line.back() == ',') fields.push_back("");
    rows.push_back(fields);
  }
  return rows;
}

// --- straight-line OAI pipeline -----------------------------------------------
// Re-derives every occupation index from the raw fixture CSV text with plain
// doubles and if-chains. No rationals, no matrix object, no shared helpers.

inline double piecewise_automation_index(int t, int r) {
  if (r == 5 || t == 0) return 0.0;
  if (t == 3 && r <= 2) return 1.0;
  if ((t == 3 && r == 3) || (t == 2 && r <= 2)) return 0.7;
  if (t == 2 && r == 3) return 0.5;
  if (((t == 2 || t == 3) && r == 4) || (t == 1 && r <= 3)) return 0.3;
  if (t == 1 && r == 4) return 0.0;
  return 0.0;
}

inline int round_half_away(double v) {
  return static_cast<int>(v >= 0 ? std::floor(v + 0.5) : std::ceil(v - 0.5));
}

struct BruteForceResult {
  std::map<std::string, double> oai;        // soc -> index
  std::map<std::string, double> task_ai;    // task -> bottleneck index
  std::map<std::string, double> dwa_ai;     // dwa -> index
};

// scenario: 0 baseline, 1 aggressive, 2 conservative.
inline BruteForceResult brute_force_oai(const std::string& tasks_csv,
                                        const std::string& task_dwa_csv,
                                        const std::string& occupations_csv,
                                        const std::string& scores_csv,
                                        int scenario = 0) {
  BruteForceResult result;

  // dwa -> list of (tech, risk) across models
  std::map<std::string, std::vector<std::pair<int, int>>> raw;
  {
    auto rows = split_rows(scores_csv);
    for (std::size_t i = 1; i < rows.size(); ++i)
      raw[rows[i][0]].push_back({std::stoi(rows[i][2]), std::stoi(rows[i][3])});
  }
  for (const auto& [dwa, list] : raw) {
    double tech_sum = 0, risk_sum = 0;
    for (auto [t, r] : list) {
      tech_sum += t;
      risk_sum += r;
    }
    const int t = round_half_away(tech_sum / static_cast<double>(list.size()));
    const int r = round_half_away(risk_sum / static_cast<double>(list.size()));
    double ai = piecewise_automation_index(t, r);
    if (scenario == 1) {  // aggressive deviations
      if (t == 3 && r == 3) ai = 1.0;
      if (t == 3 && r == 4) ai = 0.7;
    } else if (scenario == 2) {  // conservative ban on r >= 4
      if (r >= 4) ai = 0.0;
    }
    result.dwa_ai[dwa] = ai;
  }

  std::map<std::string, std::vector<std::string>> task_dwas;
  {
    auto rows = split_rows(task_dwa_csv);
    for (std::size_t i = 1; i < rows.size(); ++i) task_dwas[rows[i][0]].push_back(rows[i][1]);
  }
  for (const auto& [task, dwas] : task_dwas) {
    double min_ai = 2.0;
    for (const auto& d : dwas) min_ai = std::min(min_ai, result.dwa_ai.at(d));
    result.task_ai[task] = min_ai;
  }

  std::map<std::string, std::vector<std::pair<std::string, double>>> occ_tasks;  // soc -> (task, importance)
  {
    auto rows = split_rows(tasks_csv);
    for (std::size_t i = 1; i < rows.size(); ++i)
      occ_tasks[rows[i][1]].push_back({rows[i][0], std::stod(rows[i][3])});
  }
  {
    auto rows = split_rows(occupations_csv);
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const std::string& soc = rows[i][0];
      double total = 0;
      for (const auto& [task, imp] : occ_tasks.at(soc)) total += imp;
      double oai = 0;
      for (const auto& [task, imp] : occ_tasks.at(soc)) oai += imp / total * result.task_ai.at(task);
      result.oai[soc] = oai;
    }
  }
  return result;
}

// --- naive average-rank Pearson Spearman ---------------------------------------
// Quadratic rank counting, textbook Pearson; independent of the library route.

inline double naive_spearman_rho(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  auto ranks = [&](const std::vector<double>& v) {
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n; ++i) {
      int less = 0, equal = 0;
      for (std::size_t j = 0; j < n; ++j) {
        if (v[j] < v[i]) ++less;
        if (v[j] == v[i]) ++equal;
      }
      r[i] = less + 1 + (equal - 1) / 2.0;
    }
    return r;
  };
  const auto rx = ranks(x), ry = ranks(y);
  double sx = 0, sy = 0, sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += rx[i];
    sy += ry[i];
    sxy += rx[i] * ry[i];
    sxx += rx[i] * rx[i];
    syy += ry[i] * ry[i];
  }
  const double nd = static_cast<double>(n);
  const double cov = sxy - sx * sy / nd;
  const double vx = sxx - sx * sx / nd;
  const double vy = syy - sy * sy / nd;
  return cov / std::sqrt(vx * vy);
}

// --- Wilcoxon exact p by full 2^n sign enumeration ------------------------------

inline double wilcoxon_enumeration_p(const std::vector<double>& diffs) {
  std::vector<double> abs_d;
  for (double d : diffs)
    if (d != 0.0) abs_d.push_back(std::fabs(d));
  const std::size_t n = abs_d.size();
  // average ranks, quadratic method
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n; ++i) {
    int less = 0, equal = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (abs_d[j] < abs_d[i]) ++less;
      if (abs_d[j] == abs_d[i]) ++equal;
    }
    ranks[i] = less + 1 + (equal - 1) / 2.0;
  }
  double w_obs = 0;
  std::size_t idx = 0;
  for (double d : diffs) {
    if (d == 0.0) continue;
    if (d > 0) w_obs += ranks[idx];
    ++idx;
  }
  const std::uint64_t total = 1ULL << n;
  std::uint64_t le = 0, ge = 0;
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    double w = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (mask & (1ULL << i)) w += ranks[i];
    if (w <= w_obs + 1e-12) ++le;
    if (w >= w_obs - 1e-12) ++ge;
  }
  const double p = 2.0 * std::min(le, ge) / static_cast<double>(total);
  return std::min(1.0, p);
}

}  // namespace oracle
