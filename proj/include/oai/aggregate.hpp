#pragma once

#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "oai/ensemble.hpp"
#include "oai/matrix.hpp"
#include "oai/taxonomy.hpp"

namespace oai {

struct TaskIndexRecord {
  std::string task_id;
  Rational ai_task;            // min over constituent DWA indices
  std::string argmin_dwa_id;   // ties broken by smallest dwa_id
  int n_dwas = 0;
};

struct TaskContribution {
  std::string task_id;
  Rational weight;   // importance / within-occupation importance sum
  Rational ai_task;
};

struct OaiRecord {
  std::string soc_code;
  std::string title;
  Rational oai;
  std::vector<TaskContribution> task_breakdown;  // sorted by task_id
};

// Full per-scenario result; per-DWA and per-task intermediates are retained
// so every occupation index can be audited back to its bottleneck DWA.
struct OaiTable {
  std::string scenario;
  std::vector<OaiRecord> records;  // sorted by soc_code
  std::map<std::string, Rational> dwa_indices;
  std::map<std::string, TaskIndexRecord> task_indices;
  std::map<std::string, std::string> provenance;  // input path -> digest
};

// Bottleneck aggregation: one blocked activity blocks the whole task, so the
// task index is the minimum of its DWA indices, never their mean.
inline TaskIndexRecord task_index(const Task& task, const std::map<std::string, Rational>& dwa_ai) {
  if (task.dwa_ids.empty()) throw ComputeError("task \"" + task.task_id + "\" has empty DWA set");
  TaskIndexRecord rec;
  rec.task_id = task.task_id;
  rec.n_dwas = static_cast<int>(task.dwa_ids.size());
  bool first = true;
  for (const auto& dwa_id : task.dwa_ids) {
    auto it = dwa_ai.find(dwa_id);
    if (it == dwa_ai.end())
      throw ComputeError("task \"" + task.task_id + "\": dwa \"" + dwa_id + "\" has no automation index");
    if (first || it->second < rec.ai_task ||
        (it->second == rec.ai_task && dwa_id < rec.argmin_dwa_id)) {
      rec.ai_task = it->second;
      rec.argmin_dwa_id = dwa_id;
      first = false;
    }
  }
  return rec;
}

// Importance weights within one occupation; exact rationals summing to 1.
inline std::map<std::string, Rational> task_weights(const Occupation& occupation,
                                                    const std::map<std::string, Task>& tasks) {
  Rational total(0);
  for (const auto& task_id : occupation.task_ids) {
    auto it = tasks.find(task_id);
    if (it == tasks.end()) throw ComputeError("occupation \"" + occupation.soc_code + "\": unknown task \"" + task_id + "\"");
    if (!(it->second.importance > Rational(0)))
      throw ComputeError("task \"" + task_id + "\" has non-positive importance");
    total += it->second.importance;
  }
  if (!(total > Rational(0))) throw ComputeError("occupation \"" + occupation.soc_code + "\" has zero cumulative importance");
  std::map<std::string, Rational> weights;
  for (const auto& task_id : occupation.task_ids) weights[task_id] = tasks.at(task_id).importance / total;
  return weights;
}

inline OaiRecord occupation_index(const Occupation& occupation,
                                  const std::map<std::string, Rational>& weights,
                                  const std::map<std::string, TaskIndexRecord>& task_indices,
                                  const std::string& title) {
  OaiRecord rec;
  rec.soc_code = occupation.soc_code;
  rec.title = title;
  rec.oai = Rational(0);
  if (weights.size() != occupation.task_ids.size())
    throw ComputeError("occupation \"" + occupation.soc_code + "\": weight coverage mismatch");
  for (const auto& task_id : occupation.task_ids) {
    auto w = weights.find(task_id);
    auto ti = task_indices.find(task_id);
    if (w == weights.end() || ti == task_indices.end())
      throw ComputeError("occupation \"" + occupation.soc_code + "\": missing weight or index for task \"" + task_id + "\"");
    rec.oai += w->second * ti->second.ai_task;
    rec.task_breakdown.push_back({task_id, w->second, ti->second.ai_task});
  }
  return rec;
}

// DWA scores -> matrix lookup -> task bottleneck -> importance-weighted OAI.
// Deterministic and order-insensitive; every taxonomy DWA must be scored.
inline OaiTable compute_all(const Taxonomy& tax, const std::vector<FusedScore>& fused,
                            const MappingMatrix& matrix) {
  OaiTable table;
  table.scenario = matrix.name;

  std::map<std::string, const FusedScore*> by_dwa;
  for (const auto& f : fused) by_dwa[f.dwa_id] = &f;

  std::vector<std::string> missing;
  for (const auto& [dwa_id, dwa] : tax.dwas)
    if (by_dwa.find(dwa_id) == by_dwa.end()) missing.push_back(dwa_id);
  if (!missing.empty()) {
    std::ostringstream msg;
    msg << missing.size() << " dwa(s) without scores:";
    for (const auto& id : missing) msg << " " << id;
    throw ComputeError(msg.str());
  }

  for (const auto& [dwa_id, f] : by_dwa)
    if (tax.dwas.count(dwa_id))
      table.dwa_indices[dwa_id] = automation_index(matrix, f->tech_level, f->risk_score);

  for (const auto& [task_id, task] : tax.tasks)
    table.task_indices[task_id] = task_index(task, table.dwa_indices);

  for (const auto& [soc, occ] : tax.occupations) {
    auto weights = task_weights(occ, tax.tasks);
    table.records.push_back(occupation_index(occ, weights, table.task_indices, occ.title));
  }
  return table;
}

}  // namespace oai
