#pragma once

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oai/csv.hpp"
#include "oai/rational.hpp"

namespace oai {

struct Dwa {
  std::string dwa_id;
  std::string title;
};

struct Task {
  std::string task_id;
  std::string occupation_code;
  std::string title;
  Rational importance;                // strictly positive
  std::vector<std::string> dwa_ids;   // sorted, deduplicated, non-empty
};

struct Occupation {
  std::string soc_code;
  std::string title;
  std::vector<std::string> task_ids;  // sorted, non-empty
};

// Immutable after load; identifiers compare byte-exactly (UTF-8, no folding).
struct Taxonomy {
  std::map<std::string, Dwa> dwas;
  std::map<std::string, Task> tasks;
  std::map<std::string, Occupation> occupations;
};

struct TaxonomyIssue {
  std::string file;
  std::size_t line = 0;  // 0 when not tied to a single row
  std::string message;
};

struct LoadStats {
  std::size_t rows_in = 0;
  std::size_t rows_loaded = 0;
  std::size_t rows_rejected = 0;
};

class TaxonomyError : public ValidationError {
 public:
  TaxonomyError(std::string summary, std::vector<TaxonomyIssue> issues,
                std::map<std::string, LoadStats> stats)
      : ValidationError(format(summary, issues)),
        issues_(std::move(issues)),
        stats_(std::move(stats)) {}

  const std::vector<TaxonomyIssue>& issues() const { return issues_; }
  const std::map<std::string, LoadStats>& stats() const { return stats_; }

 private:
  static std::string format(const std::string& summary, const std::vector<TaxonomyIssue>& issues) {
    std::ostringstream out;
    out << summary;
    for (const auto& issue : issues) {
      out << "\n  " << issue.file;
      if (issue.line) out << ":" << issue.line;
      out << ": " << issue.message;
    }
    return out.str();
  }

  std::vector<TaxonomyIssue> issues_;
  std::map<std::string, LoadStats> stats_;
};

namespace detail {

struct TaxonomyLoader {
  std::vector<TaxonomyIssue> issues;
  std::map<std::string, LoadStats> stats;

  void reject(const std::string& file, std::size_t line, const std::string& message) {
    issues.push_back({file, line, message});
    stats[file].rows_rejected++;
  }

  // Checks the header row and returns the data records.
  std::vector<CsvRecord> data_rows(const std::filesystem::path& path, const std::string& header) {
    auto records = read_csv_file(path);
    const std::string file = path.filename().string();
    std::vector<std::string> expected;
    {
      std::string col;
      std::istringstream in(header);
      while (std::getline(in, col, ',')) expected.push_back(col);
    }
    if (records.empty() || records.front().fields != expected)
      throw ValidationError(file + ": expected header \"" + header + "\"");
    records.erase(records.begin());
    stats[file].rows_in = records.size();
    return records;
  }
};

}  // namespace detail

// Loads and cross-validates the four CSV files. All structural and
// referential problems are collected (never fail-fast on the first row) and
// reported in one TaxonomyError; every row-level rejection carries its line.
inline Taxonomy load_taxonomy(const std::filesystem::path& dwa_file,
                              const std::filesystem::path& task_file,
                              const std::filesystem::path& occupation_file,
                              const std::filesystem::path& task_dwa_file) {
  detail::TaxonomyLoader ld;
  Taxonomy tax;

  const std::string dwa_name = dwa_file.filename().string();
  const std::string task_name = task_file.filename().string();
  const std::string occ_name = occupation_file.filename().string();
  const std::string edge_name = task_dwa_file.filename().string();

  std::map<std::string, std::size_t> dwa_lines, task_lines, occ_lines;

  for (const auto& rec : ld.data_rows(dwa_file, "dwa_id,title")) {
    if (rec.fields.size() != 2) {
      ld.reject(dwa_name, rec.line, "expected 2 columns, got " + std::to_string(rec.fields.size()));
      continue;
    }
    const std::string& id = rec.fields[0];
    if (id.empty() || rec.fields[1].empty()) {
      ld.reject(dwa_name, rec.line, "empty dwa_id or title");
      continue;
    }
    if (!tax.dwas.emplace(id, Dwa{id, rec.fields[1]}).second) {
      ld.reject(dwa_name, rec.line, "duplicate dwa_id \"" + id + "\"");
      continue;
    }
    dwa_lines[id] = rec.line;
    ld.stats[dwa_name].rows_loaded++;
  }

  for (const auto& rec : ld.data_rows(occupation_file, "soc_code,title")) {
    if (rec.fields.size() != 2) {
      ld.reject(occ_name, rec.line, "expected 2 columns, got " + std::to_string(rec.fields.size()));
      continue;
    }
    const std::string& soc = rec.fields[0];
    if (soc.empty() || rec.fields[1].empty()) {
      ld.reject(occ_name, rec.line, "empty soc_code or title");
      continue;
    }
    if (!tax.occupations.emplace(soc, Occupation{soc, rec.fields[1], {}}).second) {
      ld.reject(occ_name, rec.line, "duplicate soc_code \"" + soc + "\"");
      continue;
    }
    occ_lines[soc] = rec.line;
    ld.stats[occ_name].rows_loaded++;
  }

  for (const auto& rec : ld.data_rows(task_file, "task_id,occupation_code,title,importance")) {
    if (rec.fields.size() != 4) {
      ld.reject(task_name, rec.line, "expected 4 columns, got " + std::to_string(rec.fields.size()));
      continue;
    }
    const std::string& id = rec.fields[0];
    const std::string& occ = rec.fields[1];
    if (id.empty() || occ.empty() || rec.fields[2].empty()) {
      ld.reject(task_name, rec.line, "empty task_id, occupation_code or title");
      continue;
    }
    Rational importance;
    try {
      importance = Rational::from_decimal(rec.fields[3]);
    } catch (const ValidationError&) {
      ld.reject(task_name, rec.line, "unparseable importance \"" + rec.fields[3] + "\"");
      continue;
    }
    if (!(importance > Rational(0))) {
      ld.reject(task_name, rec.line, "non-positive importance " + rec.fields[3] + " for task \"" + id + "\"");
      continue;
    }
    if (tax.occupations.find(occ) == tax.occupations.end()) {
      ld.reject(task_name, rec.line, "task \"" + id + "\" references unknown occupation \"" + occ + "\"");
      continue;
    }
    if (!tax.tasks.emplace(id, Task{id, occ, rec.fields[2], importance, {}}).second) {
      ld.reject(task_name, rec.line, "duplicate task_id \"" + id + "\"");
      continue;
    }
    task_lines[id] = rec.line;
    ld.stats[task_name].rows_loaded++;
  }

  std::map<std::string, std::set<std::string>> edges;
  for (const auto& rec : ld.data_rows(task_dwa_file, "task_id,dwa_id")) {
    if (rec.fields.size() != 2) {
      ld.reject(edge_name, rec.line, "expected 2 columns, got " + std::to_string(rec.fields.size()));
      continue;
    }
    const std::string& task_id = rec.fields[0];
    const std::string& dwa_id = rec.fields[1];
    bool ok = true;
    if (tax.tasks.find(task_id) == tax.tasks.end()) {
      ld.reject(edge_name, rec.line, "edge references unknown task \"" + task_id + "\"");
      ok = false;
    }
    if (ok && tax.dwas.find(dwa_id) == tax.dwas.end()) {
      ld.reject(edge_name, rec.line, "edge references unknown dwa \"" + dwa_id + "\"");
      ok = false;
    }
    if (!ok) continue;
    edges[task_id].insert(dwa_id);  // duplicate edges deduplicate here
    ld.stats[edge_name].rows_loaded++;
  }

  for (auto& [task_id, task] : tax.tasks) {
    auto it = edges.find(task_id);
    if (it == edges.end() || it->second.empty()) {
      // An empty DWA set would leave the task-level min undefined and would
      // silently bias occupation indices upward if skipped.
      ld.reject(task_name, task_lines[task_id], "task \"" + task_id + "\" has no DWAs");
      continue;
    }
    task.dwa_ids.assign(it->second.begin(), it->second.end());
    tax.occupations[task.occupation_code].task_ids.push_back(task_id);
  }

  for (auto& [soc, occ] : tax.occupations) {
    std::sort(occ.task_ids.begin(), occ.task_ids.end());
    if (occ.task_ids.empty())
      ld.reject(occ_name, occ_lines[soc], "occupation \"" + soc + "\" has no tasks");
  }

  if (!ld.issues.empty()) {
    std::stable_sort(ld.issues.begin(), ld.issues.end(), [](const TaxonomyIssue& a, const TaxonomyIssue& b) {
      return std::tie(a.file, a.line) < std::tie(b.file, b.line);
    });
    throw TaxonomyError("taxonomy validation failed (" + std::to_string(ld.issues.size()) + " issue(s))",
                        std::move(ld.issues), std::move(ld.stats));
  }
  return tax;
}

// Loads just dwas.csv (the scoring client does not need the full hierarchy).
inline std::vector<Dwa> load_dwa_file(const std::filesystem::path& dwa_file) {
  detail::TaxonomyLoader ld;
  const std::string file = dwa_file.filename().string();
  std::map<std::string, Dwa> dwas;
  for (const auto& rec : ld.data_rows(dwa_file, "dwa_id,title")) {
    if (rec.fields.size() != 2) {
      ld.reject(file, rec.line, "expected 2 columns, got " + std::to_string(rec.fields.size()));
      continue;
    }
    if (rec.fields[0].empty() || rec.fields[1].empty()) {
      ld.reject(file, rec.line, "empty dwa_id or title");
      continue;
    }
    if (!dwas.emplace(rec.fields[0], Dwa{rec.fields[0], rec.fields[1]}).second)
      ld.reject(file, rec.line, "duplicate dwa_id \"" + rec.fields[0] + "\"");
  }
  if (!ld.issues.empty())
    throw TaxonomyError("dwa file validation failed (" + std::to_string(ld.issues.size()) + " issue(s))",
                        std::move(ld.issues), std::move(ld.stats));
  std::vector<Dwa> out;
  out.reserve(dwas.size());
  for (auto& [id, dwa] : dwas) out.push_back(std::move(dwa));
  return out;
}

struct TaxonomyReport {
  std::size_t occupations = 0;
  std::size_t tasks = 0;
  std::size_t dwas = 0;
  std::size_t min_dwas_per_task = 0;
  std::size_t max_dwas_per_task = 0;
  std::size_t min_tasks_per_occupation = 0;
  std::size_t max_tasks_per_occupation = 0;
};

inline TaxonomyReport taxonomy_report(const Taxonomy& tax) {
  TaxonomyReport rep;
  rep.occupations = tax.occupations.size();
  rep.tasks = tax.tasks.size();
  rep.dwas = tax.dwas.size();
  bool first = true;
  for (const auto& [id, task] : tax.tasks) {
    std::size_t n = task.dwa_ids.size();
    if (first || n < rep.min_dwas_per_task) rep.min_dwas_per_task = n;
    if (first || n > rep.max_dwas_per_task) rep.max_dwas_per_task = n;
    first = false;
  }
  first = true;
  for (const auto& [soc, occ] : tax.occupations) {
    std::size_t n = occ.task_ids.size();
    if (first || n < rep.min_tasks_per_occupation) rep.min_tasks_per_occupation = n;
    if (first || n > rep.max_tasks_per_occupation) rep.max_tasks_per_occupation = n;
    first = false;
  }
  return rep;
}

}  // namespace oai
