#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "oai/aggregate.hpp"
#include "oai/client.hpp"
#include "oai/ensemble.hpp"
#include "oai/fixture.hpp"
#include "oai/matrix.hpp"
#include "oai/report.hpp"
#include "oai/stats.hpp"
#include "oai/taxonomy.hpp"

namespace oai::cli {

inline constexpr const char* kVersion = "0.1.0";

// Exit codes: 0 ok, 2 input validation, 3 computation precondition, 4 I/O.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitCompute = 3;
inline constexpr int kExitIo = 4;

namespace detail {

namespace fs = std::filesystem;

struct TaxonomyArgs {
  std::string dwas, tasks, occupations, task_dwa;

  void attach(CLI::App* cmd, bool required = true) {
    auto* a = cmd->add_option("--dwas", dwas, "dwas.csv");
    auto* b = cmd->add_option("--tasks", tasks, "tasks.csv");
    auto* c = cmd->add_option("--occupations", occupations, "occupations.csv");
    auto* d = cmd->add_option("--task-dwa", task_dwa, "task_dwa.csv");
    if (required)
      for (auto* opt : {a, b, c, d}) opt->required();
  }

  bool complete() const {
    return !dwas.empty() && !tasks.empty() && !occupations.empty() && !task_dwa.empty();
  }

  Taxonomy load() const { return load_taxonomy(dwas, tasks, occupations, task_dwa); }

  std::map<std::string, std::string> digests() const {
    return {{"dwas", digest_file_hex(dwas)},
            {"tasks", digest_file_hex(tasks)},
            {"occupations", digest_file_hex(occupations)},
            {"task_dwa", digest_file_hex(task_dwa)}};
  }
};

inline std::string default_out_dir() {
  const char* env = std::getenv("OAI_OUT_DIR");
  return env ? env : "";
}

inline void require_out(std::string& out, const char* what) {
  if (out.empty()) out = default_out_dir();
  if (out.empty())
    throw ValidationError(std::string(what) + ": no output path given and OAI_OUT_DIR is not set");
}

inline void write_manifest(const fs::path& dir, const std::string& command,
                           const std::map<std::string, std::string>& input_digests,
                           const nlohmann::json& extra, const std::vector<std::string>& outputs) {
  nlohmann::json doc;
  doc["command"] = command;
  doc["version"] = kVersion;
  doc["inputs"] = input_digests;
  for (auto it = extra.begin(); it != extra.end(); ++it) doc[it.key()] = it.value();
  doc["outputs"] = outputs;
  std::ofstream out(dir / "manifest.json", std::ios::binary);
  if (!out) throw IoError("cannot write manifest.json under " + dir.string());
  out << doc.dump(2) << "\n";
}

inline MappingMatrix select_matrix(const std::string& scenario, const std::string& matrix_path) {
  if (!matrix_path.empty()) {
    std::vector<std::string> warnings;
    MappingMatrix m = load_matrix(matrix_path, &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
    return m;
  }
  if (scenario == "baseline") return preset(Scenario::Baseline);
  if (scenario == "aggressive") return preset(Scenario::Aggressive);
  if (scenario == "conservative") return preset(Scenario::Conservative);
  throw ValidationError("unknown scenario \"" + scenario + "\" (expected baseline|aggressive|conservative)");
}

// --- validate ----------------------------------------------------------------

inline int cmd_validate(const TaxonomyArgs& paths) {
  const Taxonomy tax = paths.load();
  const TaxonomyReport rep = taxonomy_report(tax);
  std::cout << "occupations: " << rep.occupations << "\n"
            << "tasks: " << rep.tasks << "\n"
            << "dwas: " << rep.dwas << "\n"
            << "dwas_per_task: " << rep.min_dwas_per_task << ".." << rep.max_dwas_per_task << "\n"
            << "tasks_per_occupation: " << rep.min_tasks_per_occupation << ".."
            << rep.max_tasks_per_occupation << "\n";
  return kExitOk;
}

// --- fuse ---------------------------------------------------------------------

inline int cmd_fuse(const std::string& scores_path, std::string out_path) {
  require_out(out_path, "fuse");
  const auto fused = fuse_all(read_scores_csv(scores_path));
  const fs::path out(out_path);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  write_fused_csv(out, fused);
  write_manifest(out.has_parent_path() ? out.parent_path() : fs::path("."), "fuse",
                 {{"scores", digest_file_hex(scores_path)}}, {}, {out.filename().string()});
  std::cout << "fused " << fused.size() << " dwas -> " << out_path << "\n";
  return kExitOk;
}

// --- sample -------------------------------------------------------------------

inline std::map<Stratum, std::size_t> parse_counts(const std::string& text) {
  std::vector<std::size_t> values;
  std::string token;
  std::istringstream in(text);
  while (std::getline(in, token, ',')) {
    try {
      values.push_back(static_cast<std::size_t>(std::stoull(token)));
    } catch (const std::exception&) {
      throw ValidationError("unparseable count \"" + token + "\" in --counts");
    }
  }
  if (values.size() != 3)
    throw ValidationError("--counts expects three values: consensus,slight_friction,severe_divergence");
  return {{Stratum::Consensus, values[0]},
          {Stratum::SlightFriction, values[1]},
          {Stratum::SevereDivergence, values[2]}};
}

inline int cmd_sample(const std::string& fused_path, const std::string& counts_text,
                      std::uint64_t seed, std::string out_path) {
  require_out(out_path, "sample");
  const auto fused = read_fused_csv(fused_path);
  const auto sample = stratified_sample(fused, parse_counts(counts_text), seed);
  for (const auto& warning : sample.warnings) std::cerr << "warning: " << warning << "\n";
  const fs::path out(out_path);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  std::ofstream file(out, std::ios::binary);
  if (!file) throw IoError("cannot write " + out_path);
  file << "stratum,dwa_id\n";
  std::size_t total = 0;
  for (Stratum s : {Stratum::Consensus, Stratum::SlightFriction, Stratum::SevereDivergence}) {
    for (const auto& id : sample.drawn.at(s)) {
      file << csv_row({stratum_name(s), id});
      ++total;
    }
  }
  if (!file) throw IoError("write failed: " + out_path);
  write_manifest(out.has_parent_path() ? out.parent_path() : fs::path("."), "sample",
                 {{"fused", digest_file_hex(fused_path)}},
                 {{"seed", seed}, {"counts", counts_text}}, {out.filename().string()});
  std::cout << "sampled " << total << " dwas -> " << out_path << "\n";
  return kExitOk;
}

// --- compute -------------------------------------------------------------------

inline std::string render_breakdown_json(const OaiTable& table) {
  nlohmann::json occs = nlohmann::json::array();
  for (const auto& rec : table.records) {
    nlohmann::json tasks = nlohmann::json::array();
    for (const auto& tc : rec.task_breakdown) {
      const auto& ti = table.task_indices.at(tc.task_id);
      tasks.push_back({{"task_id", tc.task_id},
                       {"weight", tc.weight.to_double()},
                       {"ai_task", tc.ai_task.to_double()},
                       {"argmin_dwa_id", ti.argmin_dwa_id},
                       {"n_dwas", ti.n_dwas}});
    }
    occs.push_back({{"soc_code", rec.soc_code},
                    {"title", rec.title},
                    {"oai", rec.oai.to_double()},
                    {"tasks", tasks}});
  }
  nlohmann::json dwas = nlohmann::json::object();
  for (const auto& [id, ai] : table.dwa_indices) dwas[id] = ai.to_double();
  return nlohmann::json{{"scenario", table.scenario}, {"occupations", occs}, {"dwa_indices", dwas}}.dump(2) + "\n";
}

inline int cmd_compute(const TaxonomyArgs& paths, const std::string& scores_path,
                       const std::string& scenario, const std::string& matrix_path,
                       std::string out_dir_path, const std::string& formats_text, bool breakdown) {
  require_out(out_dir_path, "compute");
  const Taxonomy tax = paths.load();
  const auto fused = fuse_all(read_scores_csv(scores_path));
  const MappingMatrix matrix = select_matrix(scenario, matrix_path);
  OaiTable table = compute_all(tax, fused, matrix);
  auto digests = paths.digests();
  digests["scores"] = digest_file_hex(scores_path);
  if (!matrix_path.empty()) digests["matrix"] = digest_file_hex(matrix_path);
  table.provenance = digests;

  ReportFormats formats;
  if (!formats_text.empty()) {
    formats = {false, false, false};
    std::string token;
    std::istringstream in(formats_text);
    while (std::getline(in, token, ',')) {
      if (token == "csv") formats.csv = true;
      else if (token == "json") formats.json = true;
      else if (token == "plots") formats.plots = true;
      else throw ValidationError("unknown format \"" + token + "\" (expected csv|json|plots)");
    }
  }

  const fs::path out_dir(out_dir_path);
  const ReportManifest manifest = write_report(table, {}, std::nullopt, matrix, out_dir, formats);
  std::vector<std::string> outputs;
  for (const auto& f : manifest.files) outputs.push_back(f.name);
  if (breakdown) {
    std::ofstream bd(out_dir / "oai_breakdown.json", std::ios::binary);
    if (!bd) throw IoError("cannot write oai_breakdown.json");
    bd << render_breakdown_json(table);
    outputs.push_back("oai_breakdown.json");
  }
  write_manifest(out_dir, "compute", digests, {{"scenario", table.scenario}}, outputs);
  std::cout << "computed " << table.records.size() << " occupations (" << table.scenario
            << ") -> " << out_dir_path << "\n";
  return kExitOk;
}

// --- sensitivity ----------------------------------------------------------------

inline int cmd_sensitivity(const TaxonomyArgs& paths, const std::string& scores_path,
                           std::string out_dir_path, const std::string& table_a,
                           const std::string& table_b) {
  require_out(out_dir_path, "sensitivity");
  const fs::path out_dir(out_dir_path);
  fs::create_directories(out_dir);

  if (!table_a.empty() || !table_b.empty()) {
    // Compare-only mode over two precomputed oai.csv files.
    if (table_a.empty() || table_b.empty())
      throw ValidationError("--table-a and --table-b must be given together");
    (void)scores_path;
    const OaiTable a = read_oai_csv(table_a);
    const OaiTable b = read_oai_csv(table_b);
    const ScenarioComparison cmp = scenario_compare(a, b);
    std::ofstream out(out_dir / "sensitivity.json", std::ios::binary);
    if (!out) throw IoError("cannot write sensitivity.json");
    out << oai::detail::render_sensitivity_json({cmp});
    write_manifest(out_dir, "sensitivity",
                   {{"table_a", digest_file_hex(table_a)}, {"table_b", digest_file_hex(table_b)}}, {},
                   {"sensitivity.json"});
    std::cout << "rho(" << cmp.scenario_a << ", " << cmp.scenario_b << ") = " << cmp.rho << "\n";
    return kExitOk;
  }

  if (!paths.complete() || scores_path.empty())
    throw ValidationError("sensitivity needs the four taxonomy files and --scores (or --table-a/--table-b)");
  const Taxonomy tax = paths.load();
  const auto fused = fuse_all(read_scores_csv(scores_path));
  OaiTable baseline = compute_all(tax, fused, preset(Scenario::Baseline));
  OaiTable aggressive = compute_all(tax, fused, preset(Scenario::Aggressive));
  OaiTable conservative = compute_all(tax, fused, preset(Scenario::Conservative));

  std::vector<ScenarioComparison> comparisons = {scenario_compare(baseline, aggressive),
                                                 scenario_compare(baseline, conservative)};

  std::vector<std::string> outputs;
  for (const OaiTable* table : {&baseline, &aggressive, &conservative}) {
    const std::string name = "oai_" + table->scenario + ".csv";
    std::ofstream out(out_dir / name, std::ios::binary);
    if (!out) throw IoError("cannot write " + name);
    out << oai::detail::render_oai_csv(*table);
    outputs.push_back(name);
  }
  {
    std::ofstream out(out_dir / "sensitivity.json", std::ios::binary);
    if (!out) throw IoError("cannot write sensitivity.json");
    out << oai::detail::render_sensitivity_json(comparisons);
    outputs.push_back("sensitivity.json");
  }
  auto digests = paths.digests();
  digests["scores"] = digest_file_hex(scores_path);
  write_manifest(out_dir, "sensitivity", digests, {}, outputs);
  for (const auto& cmp : comparisons)
    std::cout << "rho(" << cmp.scenario_a << ", " << cmp.scenario_b << ") = " << cmp.rho << "\n";
  return kExitOk;
}

// --- hitl -----------------------------------------------------------------------

inline std::vector<RatingObservation> read_hitl_csv(const fs::path& path) {
  auto records = read_csv_file(path);
  const std::string file = path.filename().string();
  if (records.empty() ||
      records.front().fields != std::vector<std::string>{"dwa_id", "evaluator_id", "cohort", "tech_rating", "risk_rating"})
    throw ValidationError(file + ": expected header \"dwa_id,evaluator_id,cohort,tech_rating,risk_rating\"");
  std::vector<RatingObservation> out;
  std::set<std::pair<std::string, std::string>> seen;
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto& rec = records[i];
    if (rec.fields.size() != 5)
      throw ValidationError(file + ":" + std::to_string(rec.line) + ": expected 5 columns");
    RatingObservation obs;
    obs.dwa_id = rec.fields[0];
    obs.evaluator_id = rec.fields[1];
    obs.cohort = parse_cohort(rec.fields[2]);
    if (!rec.fields[3].empty()) {
      try {
        obs.tech_rating = static_cast<int>(std::stol(rec.fields[3]));
      } catch (const std::exception&) {
        throw ValidationError(file + ":" + std::to_string(rec.line) + ": unparseable tech_rating");
      }
      if (*obs.tech_rating < 0 || *obs.tech_rating > 3)
        throw ValidationError(file + ":" + std::to_string(rec.line) + ": tech_rating outside 0..3");
    }
    try {
      obs.risk_rating = static_cast<int>(std::stol(rec.fields[4]));
    } catch (const std::exception&) {
      throw ValidationError(file + ":" + std::to_string(rec.line) + ": unparseable risk_rating");
    }
    if (obs.risk_rating < 1 || obs.risk_rating > 5)
      throw ValidationError(file + ":" + std::to_string(rec.line) + ": risk_rating outside 1..5");
    if (!seen.insert({obs.dwa_id, obs.evaluator_id}).second)
      throw ValidationError(file + ":" + std::to_string(rec.line) + ": duplicate (dwa_id, evaluator_id)");
    out.push_back(std::move(obs));
  }
  return out;
}

inline nlohmann::json test_result_json(const TestResult& r) {
  return {{"statistic", r.statistic}, {"p_value", r.p_value}, {"n", r.n_effective}, {"method", r.method}};
}

// Statistical comparison of HITL ratings against the ensemble baseline.
//
// The AI side of every statistic is the per-DWA mean of cohort=ai rows when
// the file carries them; with no ai rows, the fused ensemble mean_risk stands
// in as the baseline for the Spearman correlations only, and the two-group
// tests (Wilcoxon, ordered logit) are skipped with a warning instead of
// fabricating an AI observation group.
inline int cmd_hitl(const std::string& hitl_path, const std::string& fused_path, std::string out_dir_path) {
  require_out(out_dir_path, "hitl");
  auto observations = read_hitl_csv(hitl_path);
  const auto fused = read_fused_csv(fused_path);
  std::map<std::string, const FusedScore*> fused_by_dwa;
  for (const auto& f : fused) fused_by_dwa[f.dwa_id] = &f;

  std::vector<std::string> missing;
  for (auto& obs : observations) {
    auto it = fused_by_dwa.find(obs.dwa_id);
    if (it == fused_by_dwa.end()) {
      missing.push_back(obs.dwa_id);
      continue;
    }
    obs.stratum = it->second->stratum;
  }
  if (!missing.empty()) {
    std::sort(missing.begin(), missing.end());
    missing.erase(std::unique(missing.begin(), missing.end()), missing.end());
    std::string msg = "hitl dwas missing from fused.csv:";
    for (const auto& id : missing) msg += " " + id;
    throw ComputeError(msg);
  }

  std::vector<std::string> warnings;

  // Per-DWA means per cohort.
  struct MeanAcc {
    double sum = 0;
    int n = 0;
    void add(int v) { sum += v; n++; }
    double mean() const { return sum / n; }
  };
  std::map<std::string, std::array<MeanAcc, 3>> risk_by_dwa;   // [cohort]
  std::map<std::string, std::array<MeanAcc, 3>> tech_by_dwa;
  bool has_ai_rows = false;
  std::set<std::string> cohorts_present;
  for (const auto& obs : observations) {
    const auto c = static_cast<std::size_t>(obs.cohort);
    risk_by_dwa[obs.dwa_id][c].add(obs.risk_rating);
    if (obs.tech_rating) tech_by_dwa[obs.dwa_id][c].add(*obs.tech_rating);
    if (obs.cohort == Cohort::AiModel) has_ai_rows = true;
    cohorts_present.insert(cohort_name(obs.cohort));
  }
  if (!has_ai_rows)
    warnings.push_back("no ai cohort rows; using fused ensemble mean_risk as the AI baseline for correlations");

  auto ai_risk_baseline = [&](const std::string& dwa) -> std::optional<double> {
    const auto& acc = risk_by_dwa.at(dwa)[static_cast<std::size_t>(Cohort::AiModel)];
    if (acc.n > 0) return acc.mean();
    return fused_by_dwa.at(dwa)->mean_risk.to_double();
  };
  auto ai_tech_baseline = [&](const std::string& dwa) -> std::optional<double> {
    const auto& acc = tech_by_dwa.at(dwa)[static_cast<std::size_t>(Cohort::AiModel)];
    if (acc.n > 0) return acc.mean();
    const auto* f = fused_by_dwa.at(dwa);
    return f->mean_tech.to_double();
  };

  nlohmann::json tests;
  tests["warnings"] = nlohmann::json::array();

  // Wilcoxon over (human mean, ai mean) pairs; positive statistic direction
  // means humans rated risk higher.
  if (has_ai_rows) {
    std::vector<std::pair<double, double>> pairs;
    for (const auto& [dwa, accs] : risk_by_dwa) {
      const auto& ai = accs[static_cast<std::size_t>(Cohort::AiModel)];
      double human_sum = 0;
      int human_n = 0;
      for (Cohort c : {Cohort::TechExpert, Cohort::MgmtExpert}) {
        const auto& acc = accs[static_cast<std::size_t>(c)];
        human_sum += acc.sum;
        human_n += acc.n;
      }
      if (ai.n > 0 && human_n > 0) pairs.push_back({human_sum / human_n, ai.mean()});
    }
    if (pairs.size() >= 2) {
      try {
        tests["wilcoxon"] = test_result_json(wilcoxon_signed_rank(pairs));
      } catch (const ComputeError& e) {
        warnings.push_back(std::string("wilcoxon skipped: ") + e.what());
      }
    } else {
      warnings.push_back("wilcoxon skipped: no matched (ai, human) pairs");
    }
  } else {
    warnings.push_back("wilcoxon skipped: needs ai cohort rows");
  }

  // Ordered logit on observation-level risk with evaluator identity dummy
  // (0 = AI model, 1 = human expert).
  if (has_ai_rows && (cohorts_present.count("tech") || cohorts_present.count("mgmt"))) {
    std::vector<std::pair<int, int>> olm_obs;
    for (const auto& obs : observations)
      olm_obs.push_back({obs.risk_rating, obs.cohort == Cohort::AiModel ? 0 : 1});
    try {
      const OrderedLogitFit fit = ordered_logit_fit(olm_obs);
      tests["ordered_logit"] = {{"beta", fit.beta},
                                {"std_err_beta", fit.std_err_beta},
                                {"z", fit.z},
                                {"p_value", fit.p_value},
                                {"thresholds", fit.thresholds},
                                {"log_likelihood", fit.log_likelihood},
                                {"iterations", fit.iterations},
                                {"converged", fit.converged}};
      for (const auto& w : fit.warnings) warnings.push_back("ordered_logit: " + w);
    } catch (const ComputeError& e) {
      warnings.push_back(std::string("ordered_logit skipped: ") + e.what());
    }
  } else {
    warnings.push_back("ordered_logit skipped: needs ai cohort rows and at least one human cohort");
  }

  // Spearman correlations against the AI baseline.
  auto cohort_spearman = [&](std::optional<Cohort> cohort, bool tech) -> std::optional<TestResult> {
    std::vector<double> human, ai;
    const auto& by_dwa = tech ? tech_by_dwa : risk_by_dwa;
    for (const auto& [dwa, accs] : by_dwa) {
      double sum = 0;
      int n = 0;
      for (Cohort c : {Cohort::TechExpert, Cohort::MgmtExpert}) {
        if (cohort && *cohort != c) continue;
        const auto& acc = accs[static_cast<std::size_t>(c)];
        sum += acc.sum;
        n += acc.n;
      }
      if (n == 0) continue;
      const auto baseline = tech ? ai_tech_baseline(dwa) : ai_risk_baseline(dwa);
      if (!baseline) continue;
      human.push_back(sum / n);
      ai.push_back(*baseline);
    }
    if (human.size() < 3) return std::nullopt;
    try {
      return spearman(ai, human);
    } catch (const ComputeError&) {
      return std::nullopt;
    }
  };

  nlohmann::json spearman_block;
  if (auto r = cohort_spearman(std::nullopt, true)) spearman_block["tech_overall"] = test_result_json(*r);
  if (auto r = cohort_spearman(std::nullopt, false)) spearman_block["risk_overall"] = test_result_json(*r);
  if (auto r = cohort_spearman(Cohort::TechExpert, false)) spearman_block["risk_tech"] = test_result_json(*r);
  if (auto r = cohort_spearman(Cohort::MgmtExpert, false)) spearman_block["risk_mgmt"] = test_result_json(*r);
  if (spearman_block.empty())
    warnings.push_back("spearman skipped: fewer than 3 dwas with human ratings");
  else
    tests["spearman"] = spearman_block;

  // The descriptive gap (the mean-shift the experts impose) is reported from
  // cell means only; the scales are not equivalent, so it is never a test.
  const HitlSummary hitl = summarize_hitl(observations);

  for (const auto& w : warnings) {
    tests["warnings"].push_back(w);
    std::cerr << "warning: " << w << "\n";
  }

  const fs::path out_dir(out_dir_path);
  fs::create_directories(out_dir);
  {
    std::ofstream out(out_dir / "table2.csv", std::ios::binary);
    if (!out) throw IoError("cannot write table2.csv");
    out << oai::detail::render_table2_csv(hitl);
  }
  {
    std::ofstream out(out_dir / "tests.json", std::ios::binary);
    if (!out) throw IoError("cannot write tests.json");
    out << tests.dump(2) << "\n";
  }
  {
    std::ofstream out(out_dir / "hitl_gap.svg", std::ios::binary);
    if (!out) throw IoError("cannot write hitl_gap.svg");
    out << oai::detail::render_gap_svg(hitl);
  }
  write_manifest(out_dir, "hitl",
                 {{"hitl", digest_file_hex(hitl_path)}, {"fused", digest_file_hex(fused_path)}}, {},
                 {"table2.csv", "tests.json", "hitl_gap.svg"});
  std::cout << "hitl analysis over " << risk_by_dwa.size() << " dwas -> " << out_dir_path << "\n";
  return kExitOk;
}

// --- score ----------------------------------------------------------------------

inline int cmd_score(const std::string& dwa_path, const std::string& endpoints_path,
                     int concurrency, std::string out_dir_path) {
  require_out(out_dir_path, "score");
  const auto dwas = load_dwa_file(dwa_path);
  const auto endpoints = load_endpoints(endpoints_path);
  const ScoreRunResult result = score_corpus(dwas, endpoints, concurrency, out_dir_path);
  write_manifest(out_dir_path, "score",
                 {{"dwas", digest_file_hex(dwa_path)}, {"endpoints", digest_file_hex(endpoints_path)}},
                 {{"concurrency", concurrency}}, {"scores.csv", "failures.csv", "attempts.log"});
  std::cout << "scored: " << result.succeeded << " ok, " << result.failed << " failed, "
            << result.skipped << " skipped (resume)\n";
  return kExitOk;
}

}  // namespace detail

// Argv-style entry point; returns the process exit code.
inline int run(std::vector<std::string> args) {
  CLI::App app{"Risk-adjusted occupational automation index pipeline"};
  app.set_version_flag("--version", kVersion);

  std::string fixture_dir;
  app.add_option("--fixture", fixture_dir, "materialize the bundled synthetic dataset into DIR and exit");

  detail::TaxonomyArgs validate_paths, compute_paths, sens_paths;
  std::string scores_path, out_path, scenario = "baseline", matrix_path, formats_text;
  std::string fused_path, counts_text = "49,17,34", hitl_path, table_a, table_b;
  std::string dwa_path, endpoints_path;
  std::uint64_t seed = 0;
  int concurrency = 4;
  bool breakdown = false;

  auto* validate = app.add_subcommand("validate", "load and validate taxonomy files");
  validate_paths.attach(validate);

  auto* fuse = app.add_subcommand("fuse", "fuse per-model scores into consensus scores");
  fuse->add_option("--scores", scores_path, "scores.csv")->required();
  fuse->add_option("--out", out_path, "output fused.csv path");

  auto* sample = app.add_subcommand("sample", "draw a stratified HITL sample");
  sample->add_option("--fused", fused_path, "fused.csv")->required();
  sample->add_option("--counts", counts_text, "per-stratum counts: consensus,slight,severe");
  sample->add_option("--seed", seed, "sampler seed")->required();
  sample->add_option("--out", out_path, "output sample.csv path");

  auto* compute = app.add_subcommand("compute", "compute occupation automation indices");
  compute_paths.attach(compute);
  compute->add_option("--scores", scores_path, "scores.csv")->required();
  compute->add_option("--scenario", scenario, "baseline|aggressive|conservative");
  compute->add_option("--matrix", matrix_path, "custom matrix.json (overrides --scenario)");
  compute->add_option("--formats", formats_text, "comma list of csv,json,plots (default all)");
  compute->add_flag("--breakdown", breakdown, "also write oai_breakdown.json");
  compute->add_option("--out", out_path, "output directory");

  auto* sensitivity = app.add_subcommand("sensitivity", "three-scenario rank-stability analysis");
  sens_paths.attach(sensitivity, /*required=*/false);
  sensitivity->add_option("--scores", scores_path, "scores.csv");
  sensitivity->add_option("--out", out_path, "output directory");
  sensitivity->add_option("--table-a", table_a, "compare-only: first oai.csv");
  sensitivity->add_option("--table-b", table_b, "compare-only: second oai.csv");

  auto* hitl = app.add_subcommand("hitl", "HITL validation statistics");
  hitl->add_option("--hitl", hitl_path, "hitl.csv")->required();
  hitl->add_option("--fused", fused_path, "fused.csv (stratum join)")->required();
  hitl->add_option("--out", out_path, "output directory");

  auto* score = app.add_subcommand("score", "collect fresh scores from model endpoints");
  score->add_option("--dwas", dwa_path, "dwas.csv")->required();
  score->add_option("--endpoints", endpoints_path, "endpoints.json")->required();
  score->add_option("--concurrency", concurrency, "max in-flight requests per endpoint");
  score->add_option("--out", out_path, "output directory");

  std::reverse(args.begin(), args.end());  // CLI11 wants reversed argv tail
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return kExitValidation;
  }

  try {
    if (!fixture_dir.empty()) {
      fixture::materialize(fixture_dir);
      std::cout << "fixture dataset written to " << fixture_dir << "\n";
      return kExitOk;
    }
    if (validate->parsed()) return detail::cmd_validate(validate_paths);
    if (fuse->parsed()) return detail::cmd_fuse(scores_path, out_path);
    if (sample->parsed()) return detail::cmd_sample(fused_path, counts_text, seed, out_path);
    if (compute->parsed())
      return detail::cmd_compute(compute_paths, scores_path, scenario, matrix_path, out_path,
                                 formats_text, breakdown);
    if (sensitivity->parsed())
      return detail::cmd_sensitivity(sens_paths, scores_path, out_path, table_a, table_b);
    if (hitl->parsed()) return detail::cmd_hitl(hitl_path, fused_path, out_path);
    if (score->parsed()) return detail::cmd_score(dwa_path, endpoints_path, concurrency, out_path);
    std::cerr << app.help();
    return kExitValidation;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const ComputeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCompute;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCompute;
  }
}

inline int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(std::move(args));
}

}  // namespace oai::cli
