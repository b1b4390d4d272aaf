#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <string_view>

#include "oai/common.hpp"

namespace oai::fixture {

// Bundled synthetic dataset: 5 occupations, 12 tasks, 20 DWAs scored by 4
// mock models, plus a matching HITL rating file. Used for onboarding runs,
// golden tests and the acceptance suite; materialized by the CLI --fixture flag.

inline constexpr std::string_view kDwasCsv = R"__csv__(dwa_id,title
D001,Draft routine status summaries
D002,Compile weekly metric digests
D003,Reconcile vendor invoice records
D004,Approve exception escalations
D005,Resolve onsite safety incidents
D006,Build predictive demand models
D007,Clean tabular survey data
D008,Document pipeline configurations
D009,Summarize experiment findings
D010,Check manuscripts for factual claims
D011,Clear libel and rights questions
D012,Rewrite passages for clarity
D013,Correct grammar and style issues
D014,Climb towers to inspect fittings
D015,Certify pressure vessel integrity
D016,Log equipment readings in ledgers
D017,Tag faulty components for repair
D018,Assemble compliance checklists
D019,Lift clients during home visits
D020,Confirm follow-up appointments
)__csv__";

inline constexpr std::string_view kTasksCsv = R"__csv__(task_id,occupation_code,title,importance
T001,11-0001.00,Coordinate daily operations,2.0
T002,11-0001.00,Approve exception workflows,3.0
T003,15-0002.00,Build predictive models,4.5
T004,15-0002.00,Document data pipelines,1.5
T005,15-0002.00,Prepare analysis reports,4.0
T006,27-0003.00,Review manuscripts for accuracy,3.0
T007,27-0003.00,Edit drafts for style,4.0
T008,47-0004.00,Inspect field equipment,5.0
T009,47-0004.00,Record maintenance findings,2.5
T010,47-0004.00,File compliance checklists,2.5
T011,29-0005.00,Assist clients with care plans,3.5
T012,29-0005.00,Schedule follow-up reviews,1.5
)__csv__";

inline constexpr std::string_view kOccupationsCsv = R"__csv__(soc_code,title
11-0001.00,Synthetic Operations Manager
15-0002.00,Synthetic Data Analyst
27-0003.00,Synthetic Copy Editor
29-0005.00,Synthetic Care Coordinator
47-0004.00,Synthetic Field Technician
)__csv__";

inline constexpr std::string_view kTaskDwaCsv = R"__csv__(task_id,dwa_id
T001,D001
T001,D002
T002,D003
T002,D004
T002,D005
T003,D006
T003,D007
T004,D008
T005,D002
T005,D009
T006,D010
T006,D011
T006,D012
T007,D013
T008,D014
T008,D015
T009,D016
T009,D017
T010,D018
T011,D019
T011,D020
T012,D005
T012,D011
)__csv__";

inline constexpr std::string_view kScoresCsv = R"__csv__(dwa_id,model_id,tech_level,risk_score,reasoning
D001,model-a,3,1,
D001,model-b,3,1,
D001,model-c,3,1,
D001,model-d,3,1,
D002,model-a,3,2,
D002,model-b,3,2,
D002,model-c,3,2,
D002,model-d,3,2,
D003,model-a,2,3,
D003,model-b,2,3,
D003,model-c,2,3,
D003,model-d,2,4,
D004,model-a,3,3,
D004,model-b,3,3,
D004,model-c,2,4,
D004,model-d,2,4,
D005,model-a,0,5,
D005,model-b,0,5,
D005,model-c,0,5,
D005,model-d,0,5,
D006,model-a,3,2,
D006,model-b,3,2,
D006,model-c,3,3,
D006,model-d,3,3,
D007,model-a,2,1,
D007,model-b,2,1,
D007,model-c,2,1,
D007,model-d,3,1,
D008,model-a,1,2,
D008,model-b,1,2,
D008,model-c,1,2,
D008,model-d,1,2,
D009,model-a,2,2,
D009,model-b,3,2,
D009,model-c,3,2,
D009,model-d,3,3,
D010,model-a,3,1,
D010,model-b,3,1,
D010,model-c,3,2,
D010,model-d,3,2,
D011,model-a,2,4,
D011,model-b,2,4,
D011,model-c,2,4,
D011,model-d,2,4,
D012,model-a,3,3,
D012,model-b,3,3,
D012,model-c,3,3,
D012,model-d,3,3,
D013,model-a,2,2,
D013,model-b,2,2,
D013,model-c,2,2,
D013,model-d,2,3,
D014,model-a,0,5,
D014,model-b,0,5,
D014,model-c,0,4,
D014,model-d,1,5,
D015,model-a,1,4,
D015,model-b,1,4,
D015,model-c,1,4,
D015,model-d,1,4,
D016,model-a,1,3,
D016,model-b,1,3,
D016,model-c,2,3,
D016,model-d,2,3,
D017,model-a,1,3,
D017,model-b,1,3,
D017,model-c,1,3,
D017,model-d,1,3,
D018,model-a,3,4,
D018,model-b,3,4,
D018,model-c,3,4,
D018,model-d,3,4,
D019,model-a,0,4,
D019,model-b,0,5,
D019,model-c,0,5,
D019,model-d,0,5,
D020,model-a,1,2,
D020,model-b,2,3,
D020,model-c,2,3,
D020,model-d,3,4,
)__csv__";

inline constexpr std::string_view kHitlCsv = R"__csv__(dwa_id,evaluator_id,cohort,tech_rating,risk_rating
D001,model-a,ai,3,1
D001,model-b,ai,3,1
D001,model-c,ai,3,1
D001,model-d,ai,3,1
D002,model-a,ai,3,2
D002,model-b,ai,3,2
D002,model-c,ai,3,2
D002,model-d,ai,3,2
D003,model-a,ai,2,3
D003,model-b,ai,2,3
D003,model-c,ai,2,3
D003,model-d,ai,2,4
D004,model-a,ai,3,3
D004,model-b,ai,3,3
D004,model-c,ai,2,4
D004,model-d,ai,2,4
D006,model-a,ai,3,2
D006,model-b,ai,3,2
D006,model-c,ai,3,3
D006,model-d,ai,3,3
D009,model-a,ai,2,2
D009,model-b,ai,3,2
D009,model-c,ai,3,2
D009,model-d,ai,3,3
D011,model-a,ai,2,4
D011,model-b,ai,2,4
D011,model-c,ai,2,4
D011,model-d,ai,2,4
D012,model-a,ai,3,3
D012,model-b,ai,3,3
D012,model-c,ai,3,3
D012,model-d,ai,3,3
D013,model-a,ai,2,2
D013,model-b,ai,2,2
D013,model-c,ai,2,2
D013,model-d,ai,2,3
D016,model-a,ai,1,3
D016,model-b,ai,1,3
D016,model-c,ai,2,3
D016,model-d,ai,2,3
D001,tech-e1,tech,3,1
D002,tech-e1,tech,3,2
D003,tech-e1,tech,2,3
D004,tech-e1,tech,2,4
D006,tech-e1,tech,3,3
D009,tech-e1,tech,3,2
D011,tech-e1,tech,2,4
D012,tech-e1,tech,3,3
D013,tech-e1,tech,2,2
D016,tech-e1,tech,2,3
D001,tech-e2,tech,3,1
D002,tech-e2,tech,3,2
D003,tech-e2,tech,2,4
D004,tech-e2,tech,3,4
D006,tech-e2,tech,3,2
D009,tech-e2,tech,2,3
D011,tech-e2,tech,2,4
D012,tech-e2,tech,3,3
D013,tech-e2,tech,2,3
D016,tech-e2,tech,1,3
D001,tech-e3,tech,3,2
D002,tech-e3,tech,2,2
D003,tech-e3,tech,2,3
D004,tech-e3,tech,2,3
D006,tech-e3,tech,3,3
D009,tech-e3,tech,3,2
D011,tech-e3,tech,1,5
D012,tech-e3,tech,3,3
D013,tech-e3,tech,2,2
D016,tech-e3,tech,2,4
D001,mgmt-e1,mgmt,3,2
D002,mgmt-e1,mgmt,3,2
D003,mgmt-e1,mgmt,2,3
D004,mgmt-e1,mgmt,2,4
D006,mgmt-e1,mgmt,2,4
D009,mgmt-e1,mgmt,3,4
D011,mgmt-e1,mgmt,2,5
D012,mgmt-e1,mgmt,3,4
D013,mgmt-e1,mgmt,1,4
D016,mgmt-e1,mgmt,2,4
D001,mgmt-e2,mgmt,3,1
D002,mgmt-e2,mgmt,3,3
D003,mgmt-e2,mgmt,1,3
D004,mgmt-e2,mgmt,2,5
D006,mgmt-e2,mgmt,3,3
D009,mgmt-e2,mgmt,2,3
D011,mgmt-e2,mgmt,2,4
D012,mgmt-e2,mgmt,2,3
D013,mgmt-e2,mgmt,2,4
D016,mgmt-e2,mgmt,1,3
D001,mgmt-e3,mgmt,2,2
D002,mgmt-e3,mgmt,3,2
D003,mgmt-e3,mgmt,2,4
D004,mgmt-e3,mgmt,3,4
D006,mgmt-e3,mgmt,3,4
D009,mgmt-e3,mgmt,3,3
D011,mgmt-e3,mgmt,2,5
D012,mgmt-e3,mgmt,3,4
D013,mgmt-e3,mgmt,2,3
D016,mgmt-e3,mgmt,2,4
D001,mgmt-e4,mgmt,3,1
D002,mgmt-e4,mgmt,3,3
D003,mgmt-e4,mgmt,2,3
D004,mgmt-e4,mgmt,2,4
D006,mgmt-e4,mgmt,3,3
D009,mgmt-e4,mgmt,2,4
D011,mgmt-e4,mgmt,2,5
D012,mgmt-e4,mgmt,3,3
D013,mgmt-e4,mgmt,2,4
D016,mgmt-e4,mgmt,1,3
)__csv__";

inline constexpr std::string_view kBaselineMatrixJson = R"__json__({
  "name": "baseline",
  "cells": [
    [0.0, 0.0, 0.0, 0.0, 0.0],
    [0.3, 0.3, 0.3, 0.0, 0.0],
    [0.7, 0.7, 0.5, 0.3, 0.0],
    [1.0, 1.0, 0.7, 0.3, 0.0]
  ]
}
)__json__";

inline const std::map<std::string, std::string_view>& files() {
  static const std::map<std::string, std::string_view> m = {
      {"dwas.csv", kDwasCsv},
      {"tasks.csv", kTasksCsv},
      {"occupations.csv", kOccupationsCsv},
      {"task_dwa.csv", kTaskDwaCsv},
      {"scores.csv", kScoresCsv},
      {"hitl.csv", kHitlCsv},
      {"matrix_baseline.json", kBaselineMatrixJson},
  };
  return m;
}

inline void materialize(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (!std::filesystem::is_directory(dir)) throw IoError("cannot create directory " + dir.string());
  for (const auto& [name, content] : files()) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw IoError("cannot write " + (dir / name).string());
    out << content;
    if (!out) throw IoError("write failed: " + (dir / name).string());
  }
}

}  // namespace oai::fixture
