#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>

#include "oai/cli.hpp"

#include "util.hpp"

using testutil::TempDir;
using testutil::slurp;

namespace {

int run(std::vector<std::string> args) { return oai::cli::run(std::move(args)); }

struct Fixture {
  TempDir dir;
  std::string dwas, tasks, occupations, task_dwa, scores, hitl;

  Fixture() {
    REQUIRE(run({"--fixture", dir.path().string()}) == 0);
    dwas = (dir.path() / "dwas.csv").string();
    tasks = (dir.path() / "tasks.csv").string();
    occupations = (dir.path() / "occupations.csv").string();
    task_dwa = (dir.path() / "task_dwa.csv").string();
    scores = (dir.path() / "scores.csv").string();
    hitl = (dir.path() / "hitl.csv").string();
  }

  std::vector<std::string> taxonomy_args() const {
    return {"--dwas", dwas, "--tasks", tasks, "--occupations", occupations, "--task-dwa", task_dwa};
  }
};

std::vector<std::string> with_taxonomy(const Fixture& f, std::vector<std::string> args) {
  auto tax = f.taxonomy_args();
  args.insert(args.end(), tax.begin(), tax.end());
  return args;
}

}  // namespace

TEST_CASE("--fixture materializes the bundled dataset") {
  TempDir dir;
  CHECK(run({"--fixture", (dir.path() / "fx").string()}) == 0);
  for (const char* name : {"dwas.csv", "tasks.csv", "occupations.csv", "task_dwa.csv", "scores.csv",
                           "hitl.csv", "matrix_baseline.json"})
    CHECK(std::filesystem::exists(dir.path() / "fx" / name));
}

TEST_CASE("validate: fixture passes, broken inputs exit 2 with named ids") {
  Fixture f;
  CHECK(run(with_taxonomy(f, {"validate"})) == 0);

  //

  TempDir broken;
  std::string edges = slurp(f.task_dwa);
  edges += "T001,X999\n";
  std::ofstream(broken.path() / "task_dwa.csv") << edges;
  CHECK(run({"validate", "--dwas", f.dwas, "--tasks", f.tasks, "--occupations", f.occupations,
             "--task-dwa", (broken.path() / "task_dwa.csv").string()}) == 2);

  CHECK(run({"validate", "--dwas", "no_such_file.csv", "--tasks", f.tasks, "--occupations",
             f.occupations, "--task-dwa", f.task_dwa}) == 2);
}

TEST_CASE("unknown flags and missing required options exit 2") {
  Fixture f;
  CHECK(run({"validate", "--bogus"}) == 2);
  CHECK(run({"compute", "--scores", f.scores}) == 2);
  CHECK(run({}) == 2);
}

TEST_CASE("compute: baseline run writes the golden oai.csv and manifest") {
  Fixture f;
  TempDir out;
  CHECK(run(with_taxonomy(f, {"compute", "--scores", f.scores, "--scenario", "baseline", "--out",
                              out.path().string()})) == 0);
  const std::string expected =
      "soc_code,title,oai,scenario\n"
      "15-0002.00,Synthetic Data Analyst,0.7600,baseline\n"
      "27-0003.00,Synthetic Copy Editor,0.5286,baseline\n"
      "11-0001.00,Synthetic Operations Manager,0.4000,baseline\n"
      "47-0004.00,Synthetic Field Technician,0.1500,baseline\n"
      "29-0005.00,Synthetic Care Coordinator,0.0000,baseline\n";
  CHECK(slurp(out.path() / "oai.csv") == expected);
  CHECK(std::filesystem::exists(out.path() / "summary.json"));
  CHECK(std::filesystem::exists(out.path() / "oai_density.svg"));
  CHECK(std::filesystem::exists(out.path() / "matrix_heatmap.svg"));

  const auto manifest = nlohmann::json::parse(slurp(out.path() / "manifest.json"));
  CHECK(manifest["command"] == "compute");
  CHECK(manifest["scenario"] == "baseline");
  CHECK(manifest["inputs"].size() == 5);
  for (const auto& [key, digest] : manifest["inputs"].items())
    CHECK(digest.get<std::string>().size() == 16);

  const auto summary = nlohmann::json::parse(slurp(out.path() / "summary.json"));
  CHECK(summary["counts"]["high"] == 1);
  CHECK(summary["counts"]["medium"] == 2);
  CHECK(summary["counts"]["low"] == 2);
}

TEST_CASE("compute runs are byte-deterministic") {
  Fixture f;
  TempDir out1, out2;
  REQUIRE(run(with_taxonomy(f, {"compute", "--scores", f.scores, "--out", out1.path().string()})) == 0);
  REQUIRE(run(with_taxonomy(f, {"compute", "--scores", f.scores, "--out", out2.path().string()})) == 0);
  for (const char* name : {"oai.csv", "summary.json"})
    CHECK(slurp(out1.path() / name) == slurp(out2.path() / name));
}

TEST_CASE("compute with an all-zero custom matrix reports everything low") {
  Fixture f;
  TempDir out;
  const auto matrix = out.write("zeros.json",
                                R"({"name":"zeros","cells":[[0,0,0,0,0],[0,0,0,0,0],[0,0,0,0,0],[0,0,0,0,0]]})");
  CHECK(run(with_taxonomy(f, {"compute", "--scores", f.scores, "--matrix", matrix.string(), "--out",
                              (out.path() / "r").string()})) == 0);
  const auto summary = nlohmann::json::parse(slurp(out.path() / "r" / "summary.json"));
  CHECK(summary["counts"]["low"] == 5);
  CHECK(summary["counts"]["high"] == 0);
}

TEST_CASE("compute with an unscored dwa exits 3 and lists the ids") {
  Fixture f;
  // Add a dwa to the taxonomy that has no scores.
  TempDir broken;
  std::ofstream(broken.path() / "dwas.csv") << slurp(f.dwas) << "D999,Unscored activity\n";
  std::ofstream(broken.path() / "task_dwa.csv") << slurp(f.task_dwa) << "T001,D999\n";
  TempDir out;
  CHECK(run({"compute", "--dwas", (broken.path() / "dwas.csv").string(), "--tasks", f.tasks,
             "--occupations", f.occupations, "--task-dwa", (broken.path() / "task_dwa.csv").string(),
             "--scores", f.scores, "--out", out.path().string()}) == 3);
}

TEST_CASE("compute --formats csv skips json and plots; --breakdown adds provenance detail") {
  Fixture f;
  TempDir out;
  CHECK(run(with_taxonomy(f, {"compute", "--scores", f.scores, "--formats", "csv", "--breakdown",
                              "--out", out.path().string()})) == 0);
  CHECK(std::filesystem::exists(out.path() / "oai.csv"));
  CHECK(!std::filesystem::exists(out.path() / "summary.json"));
  CHECK(!std::filesystem::exists(out.path() / "oai_density.svg"));
  const auto breakdown = nlohmann::json::parse(slurp(out.path() / "oai_breakdown.json"));
  CHECK(breakdown["occupations"].size() == 5);
  CHECK(breakdown["dwa_indices"].size() == 20);
}

TEST_CASE("sensitivity: fixture produces three tables and the frozen golden rhos") {
  Fixture f;
  TempDir out;
  CHECK(run(with_taxonomy(f, {"sensitivity", "--scores", f.scores, "--out", out.path().string()})) == 0);
  for (const char* name : {"oai_baseline.csv", "oai_aggressive.csv", "oai_conservative.csv"})
    CHECK(std::filesystem::exists(out.path() / name));
  const auto doc = nlohmann::json::parse(slurp(out.path() / "sensitivity.json"));
  REQUIRE(doc.size() == 2);
  CHECK(doc[0]["a"] == "baseline");
  CHECK(doc[0]["b"] == "aggressive");
  CHECK(doc[0]["rho"].get<double>() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(doc[1]["b"] == "conservative");
  CHECK(doc[1]["rho"].get<double>() == doctest::Approx(std::sqrt(0.95)).epsilon(1e-12));
  CHECK(doc[1]["n"] == 5);
}

TEST_CASE("sensitivity compare-only mode: identical tables give rho 1, mismatched sets exit 3") {
  Fixture f;
  TempDir out;
  REQUIRE(run(with_taxonomy(f, {"compute", "--scores", f.scores, "--formats", "csv", "--out",
                                out.path().string()})) == 0);
  const std::string table = (out.path() / "oai.csv").string();
  TempDir cmp_out;
  CHECK(run({"sensitivity", "--table-a", table, "--table-b", table, "--out",
             cmp_out.path().string()}) == 0);
  const auto doc = nlohmann::json::parse(slurp(cmp_out.path() / "sensitivity.json"));
  CHECK(doc[0]["rho"].get<double>() == doctest::Approx(1.0));

  // A table over a different occupation set cannot be compared.
  std::string other = slurp(table);
  other.replace(other.find("15-0002.00"), 10, "16-0002.00");
  const auto other_path = cmp_out.write("other.csv", other);
  CHECK(run({"sensitivity", "--table-a", table, "--table-b", other_path.string(), "--out",
             cmp_out.path().string()}) == 3);

  // Neither a compute configuration nor a table pair is a usage error.
  CHECK(run({"sensitivity", "--out", cmp_out.path().string()}) == 2);
}

TEST_CASE("sensitivity runs are byte-deterministic") {
  Fixture f;
  TempDir out1, out2;
  REQUIRE(run(with_taxonomy(f, {"sensitivity", "--scores", f.scores, "--out", out1.path().string()})) == 0);
  REQUIRE(run(with_taxonomy(f, {"sensitivity", "--scores", f.scores, "--out", out2.path().string()})) == 0);
  for (const char* name : {"oai_baseline.csv", "oai_aggressive.csv", "oai_conservative.csv",
                           "sensitivity.json"})
    CHECK(slurp(out1.path() / name) == slurp(out2.path() / name));
}

TEST_CASE("fuse and sample: frozen seed-7 draw through the CLI") {
  Fixture f;
  TempDir out;
  const std::string fused = (out.path() / "fused.csv").string();
  CHECK(run({"fuse", "--scores", f.scores, "--out", fused}) == 0);
  REQUIRE(std::filesystem::exists(fused));

  const std::string sample = (out.path() / "sample.csv").string();
  CHECK(run({"sample", "--fused", fused, "--counts", "2,2,2", "--seed", "7", "--out", sample}) == 0);
  CHECK(slurp(sample) ==
        "stratum,dwa_id\n"
        "consensus,D005\n"
        "consensus,D011\n"
        "slight_friction,D009\n"
        "slight_friction,D019\n"
        "severe_divergence,D010\n"
        "severe_divergence,D006\n");

  // Both runs leave a manifest next to their output; the sample run's
  // manifest (the latest) echoes the seed and counts.
  const auto manifest = nlohmann::json::parse(slurp(out.path() / "manifest.json"));
  CHECK(manifest["command"] == "sample");
  CHECK(manifest["seed"] == 7);
  CHECK(manifest["counts"] == "2,2,2");
  CHECK(manifest["inputs"]["fused"].get<std::string>().size() == 16);
}

TEST_CASE("--version exits zero") { CHECK(run({"--version"}) == 0); }

TEST_CASE("sample clamps oversized requests with a warning, exit 0") {
  Fixture f;
  TempDir out;
  const std::string fused = (out.path() / "fused.csv").string();
  REQUIRE(run({"fuse", "--scores", f.scores, "--out", fused}) == 0);
  const std::string sample = (out.path() / "sample.csv").string();
  CHECK(run({"sample", "--fused", fused, "--counts", "49,17,34", "--seed", "1", "--out", sample}) == 0);
  // 20 fixture dwas in total; every stratum clamps to its size.
  std::istringstream in(slurp(sample));
  std::string line;
  int rows = -1;  // header
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 20);
}

TEST_CASE("hitl: fixture statistics match the frozen goldens") {
  Fixture f;
  TempDir out;
  const std::string fused = (out.path() / "fused.csv").string();
  REQUIRE(run({"fuse", "--scores", f.scores, "--out", fused}) == 0);
  CHECK(run({"hitl", "--hitl", f.hitl, "--fused", fused, "--out", out.path().string()}) == 0);

  const auto tests = nlohmann::json::parse(slurp(out.path() / "tests.json"));
  // Wilcoxon: every per-dwa human mean exceeds the AI mean; W+ = 55 over 10
  // pairs, exact two-sided p = 2/2^10. Cross-checked against scipy.
  CHECK(tests["wilcoxon"]["statistic"].get<double>() == doctest::Approx(55.0));
  CHECK(tests["wilcoxon"]["p_value"].get<double>() == doctest::Approx(0.001953125).epsilon(1e-9));
  CHECK(tests["wilcoxon"]["method"] == "exact");
  CHECK(tests["wilcoxon"]["n"] == 10);

  // Ordered logit: statsmodels OrderedModel on the same data gives
  // beta = 0.8952, se = 0.366, p = 0.0145.
  CHECK(tests["ordered_logit"]["converged"] == true);
  CHECK(tests["ordered_logit"]["beta"].get<double>() == doctest::Approx(0.8952).epsilon(2e-3));
  CHECK(tests["ordered_logit"]["p_value"].get<double>() == doctest::Approx(0.0145).epsilon(2e-2));
  CHECK(tests["ordered_logit"]["thresholds"].size() == 4);

  // Spearman rank alignment; rho values cross-checked against scipy.
  CHECK(tests["spearman"]["tech_overall"]["statistic"].get<double>() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(tests["spearman"]["risk_overall"]["statistic"].get<double>() ==
        doctest::Approx(0.963190184049).epsilon(1e-9));
  CHECK(tests["spearman"]["risk_tech"]["statistic"].get<double>() ==
        doctest::Approx(0.990797546012).epsilon(1e-9));
  CHECK(tests["spearman"]["risk_mgmt"]["statistic"].get<double>() ==
        doctest::Approx(0.676314677970).epsilon(1e-9));

  // table2.csv grid: frozen from an independent spreadsheet-style recomputation.
  const std::string table2 = slurp(out.path() / "table2.csv");
  CHECK(table2.find("consensus,5,2.60,2.80,3.15") != std::string::npos);
  CHECK(table2.find("slight_friction,3,2.58,2.67,3.50") != std::string::npos);
  CHECK(table2.find("severe_divergence,2,3.00,3.17,3.88") != std::string::npos);
  CHECK(std::filesystem::exists(out.path() / "hitl_gap.svg"));
}

TEST_CASE("hitl with a single human cohort and no ai rows is spearman-only with warnings") {
  Fixture f;
  TempDir out;
  const std::string fused = (out.path() / "fused.csv").string();
  REQUIRE(run({"fuse", "--scores", f.scores, "--out", fused}) == 0);

  // Strip everything but the tech cohort out of the fixture hitl file.
  std::istringstream in(slurp(f.hitl));
  std::string line, filtered;
  std::getline(in, line);
  filtered = line + "\n";
  while (std::getline(in, line))
    if (line.find(",tech,") != std::string::npos) filtered += line + "\n";
  const auto single = out.write("hitl_single.csv", filtered);

  CHECK(run({"hitl", "--hitl", single.string(), "--fused", fused, "--out", out.path().string()}) == 0);
  const auto tests = nlohmann::json::parse(slurp(out.path() / "tests.json"));
  CHECK(!tests.contains("wilcoxon"));
  CHECK(!tests.contains("ordered_logit"));
  CHECK(tests.contains("spearman"));
  CHECK(tests["spearman"].contains("risk_tech"));
  CHECK(tests["warnings"].size() >= 2);
}

TEST_CASE("hitl dwas absent from fused.csv exit 3") {
  Fixture f;
  TempDir out;
  const std::string fused = (out.path() / "fused.csv").string();
  REQUIRE(run({"fuse", "--scores", f.scores, "--out", fused}) == 0);
  const auto orphan = out.write("hitl_orphan.csv",
                                "dwa_id,evaluator_id,cohort,tech_rating,risk_rating\nD998,e,tech,2,3\n");
  CHECK(run({"hitl", "--hitl", orphan.string(), "--fused", fused, "--out", out.path().string()}) == 3);
}

TEST_CASE("OAI_OUT_DIR supplies the default output directory") {
  Fixture f;
  TempDir out;
  ::setenv("OAI_OUT_DIR", (out.path() / "env_out").string().c_str(), 1);
  CHECK(run(with_taxonomy(f, {"compute", "--scores", f.scores})) == 0);
  CHECK(std::filesystem::exists(out.path() / "env_out" / "oai.csv"));
  ::unsetenv("OAI_OUT_DIR");

  // With neither --out nor the variable, the run is a usage error.
  CHECK(run(with_taxonomy(f, {"compute", "--scores", f.scores})) == 2);
}

TEST_CASE("score: bad endpoints file exits 2 without touching the network") {
  Fixture f;
  TempDir out;
  const auto endpoints = out.write("endpoints.json", "[]");
  CHECK(run({"score", "--dwas", f.dwas, "--endpoints", endpoints.string(), "--out",
             out.path().string()}) == 2);
}

TEST_CASE("score: unreachable endpoint exits 4 and records failures") {
  Fixture f;
  TempDir out;
  // Reserved TEST-NET address: connections fail fast.
  const auto endpoints = out.write(
      "endpoints.json",
      R"([{"base_url": "http://127.0.0.1:1", "model_id": "m", "timeout": 1, "max_retries": 0, "backoff_ms": 1}])");
  const auto small_dwas = out.write("dwas.csv", "dwa_id,title\nD1,Lone activity\n");
  CHECK(run({"score", "--dwas", small_dwas.string(), "--endpoints", endpoints.string(), "--out",
             (out.path() / "run").string()}) == 4);
  CHECK(std::filesystem::exists(out.path() / "run" / "failures.csv"));
}
