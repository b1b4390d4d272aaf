#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "oai/aggregate.hpp"
#include "oai/fixture.hpp"

#include "oracles.hpp"
#include "util.hpp"

using oai::MappingMatrix;
using oai::OaiTable;
using oai::Rational;
using oai::Scenario;
using oai::Task;
using testutil::TempDir;

namespace {

struct Fixture {
  TempDir dir;
  oai::Taxonomy tax;
  std::vector<oai::FusedScore> fused;

  Fixture() {
    oai::fixture::materialize(dir.path());
    tax = oai::load_taxonomy(dir.path() / "dwas.csv", dir.path() / "tasks.csv",
                             dir.path() / "occupations.csv", dir.path() / "task_dwa.csv");
    fused = oai::fuse_all(oai::read_scores_csv(dir.path() / "scores.csv"));
  }
};

MappingMatrix constant_matrix(const Rational& v, const std::string& name) {
  MappingMatrix m;
  m.name = name;
  for (auto& row : m.cells)
    for (auto& cell : row) cell = v;
  return m;
}

Task make_task(const std::string& id, std::vector<std::string> dwas) {
  return Task{id, "S1", "t", Rational(1), std::move(dwas)};
}

}  // namespace

TEST_CASE("task index is the bottleneck minimum, not the mean") {
  std::map<std::string, Rational> ai = {{"a", Rational(1)}, {"b", Rational(1)}, {"c", Rational(1)},
                                        {"d", Rational(1)}, {"e", Rational(0)}};
  const auto rec = oai::task_index(make_task("T", {"a", "b", "c", "d", "e"}), ai);
  CHECK(rec.ai_task == Rational(0));  // a linear mean would report 0.8
  CHECK(rec.argmin_dwa_id == "e");
  CHECK(rec.n_dwas == 5);
}

TEST_CASE("task index of two values is their min") {
  std::map<std::string, Rational> ai = {{"a", Rational(7, 10)}, {"b", Rational(1)}};
  const auto rec = oai::task_index(make_task("T", {"a", "b"}), ai);
  CHECK(rec.ai_task == Rational(7, 10));
  CHECK(rec.argmin_dwa_id == "a");
}

TEST_CASE("task index ties report the lexicographically smallest dwa") {
  std::map<std::string, Rational> ai = {{"x2", Rational(1, 2)}, {"x1", Rational(1, 2)}, {"x3", Rational(1, 2)}};
  const auto rec = oai::task_index(make_task("T", {"x2", "x1", "x3"}), ai);
  CHECK(rec.ai_task == Rational(1, 2));
  CHECK(rec.argmin_dwa_id == "x1");
}

TEST_CASE("task index requires every dwa to be scored") {
  std::map<std::string, Rational> ai = {{"a", Rational(1)}};
  CHECK_THROWS_AS(oai::task_index(make_task("T", {"a", "missing"}), ai), oai::ComputeError);
}

TEST_CASE("task weights normalize importance to exactly one") {
  oai::Occupation occ{"S1", "Occ", {"t1", "t2"}};
  std::map<std::string, Task> tasks;
  tasks["t1"] = Task{"t1", "S1", "", Rational(2), {"d"}};
  tasks["t2"] = Task{"t2", "S1", "", Rational(3), {"d"}};
  const auto weights = oai::task_weights(occ, tasks);
  CHECK(weights.at("t1") == Rational(2, 5));
  CHECK(weights.at("t2") == Rational(3, 5));
  CHECK(weights.at("t1") + weights.at("t2") == Rational(1));
}

TEST_CASE("single task gets weight one; equal importances split evenly") {
  oai::Occupation solo{"S1", "Occ", {"t1"}};
  std::map<std::string, Task> tasks;
  tasks["t1"] = Task{"t1", "S1", "", Rational(9, 2), {"d"}};
  CHECK(oai::task_weights(solo, tasks).at("t1") == Rational(1));

  oai::Occupation even{"S1", "Occ", {"t1", "t2", "t3"}};
  tasks["t2"] = Task{"t2", "S1", "", Rational(9, 2), {"d"}};
  tasks["t3"] = Task{"t3", "S1", "", Rational(9, 2), {"d"}};
  const auto weights = oai::task_weights(even, tasks);
  for (const auto& [id, w] : weights) CHECK(w == Rational(1, 3));
}

TEST_CASE("occupation index is the exact weighted sum") {
  oai::Occupation occ{"S1", "Occ", {"t1", "t2"}};
  std::map<std::string, Rational> weights = {{"t1", Rational(2, 5)}, {"t2", Rational(3, 5)}};
  std::map<std::string, oai::TaskIndexRecord> indices;
  indices["t1"] = {"t1", Rational(1, 2), "d", 1};
  indices["t2"] = {"t2", Rational(1), "d", 1};
  const auto rec = oai::occupation_index(occ, weights, indices, "Occ");
  CHECK(rec.oai == Rational(4, 5));
  REQUIRE(rec.task_breakdown.size() == 2);
}

TEST_CASE("all-zero and all-one task indices hit the range endpoints") {
  oai::Occupation occ{"S1", "Occ", {"t1", "t2"}};
  std::map<std::string, Rational> weights = {{"t1", Rational(2, 5)}, {"t2", Rational(3, 5)}};
  std::map<std::string, oai::TaskIndexRecord> zeros, ones;
  zeros["t1"] = {"t1", Rational(0), "d", 1};
  zeros["t2"] = {"t2", Rational(0), "d", 1};
  ones["t1"] = {"t1", Rational(1), "d", 1};
  ones["t2"] = {"t2", Rational(1), "d", 1};
  CHECK(oai::occupation_index(occ, weights, zeros, "Occ").oai == Rational(0));
  CHECK(oai::occupation_index(occ, weights, ones, "Occ").oai == Rational(1));
}

TEST_CASE("coverage mismatch is an error") {
  oai::Occupation occ{"S1", "Occ", {"t1", "t2"}};
  std::map<std::string, Rational> weights = {{"t1", Rational(1)}};
  std::map<std::string, oai::TaskIndexRecord> indices;
  indices["t1"] = {"t1", Rational(1), "d", 1};
  CHECK_THROWS_AS(oai::occupation_index(occ, weights, indices, "Occ"), oai::ComputeError);
}

TEST_CASE("fixture baseline OAIs match the frozen hand-computed values") {
  Fixture f;
  const OaiTable table = oai::compute_all(f.tax, f.fused, oai::preset(Scenario::Baseline));
  REQUIRE(table.records.size() == 5);
  std::map<std::string, Rational> expected = {
      {"11-0001.00", Rational(2, 5)},    // 0.4*1.0 + 0.6*0
      {"15-0002.00", Rational(19, 25)},  // 0.45*0.7 + 0.15*0.3 + 0.40*1.0
      {"27-0003.00", Rational(37, 70)},  // (3*0.3 + 4*0.7)/7
      {"29-0005.00", Rational(0)},
      {"47-0004.00", Rational(3, 20)},   // 0.25*0.3 + 0.25*0.3
  };
  for (const auto& rec : table.records) {
    CAPTURE(rec.soc_code);
    CHECK(rec.oai == expected.at(rec.soc_code));
  }
  // Audit intermediates are retained.
  CHECK(table.dwa_indices.size() == 20);
  CHECK(table.task_indices.size() == 12);
  CHECK(table.task_indices.at("T002").argmin_dwa_id == "D005");
  CHECK(table.task_indices.at("T006").argmin_dwa_id == "D011");
}

TEST_CASE("pipeline agrees with the straight-line brute-force oracle to 1e-12") {
  Fixture f;
  for (int scenario = 0; scenario < 3; ++scenario) {
    const MappingMatrix m = oai::preset(scenario == 0   ? Scenario::Baseline
                                        : scenario == 1 ? Scenario::Aggressive
                                                        : Scenario::Conservative);
    const OaiTable table = oai::compute_all(f.tax, f.fused, m);
    const auto oracle = oracle::brute_force_oai(
        std::string(oai::fixture::kTasksCsv), std::string(oai::fixture::kTaskDwaCsv),
        std::string(oai::fixture::kOccupationsCsv), std::string(oai::fixture::kScoresCsv), scenario);
    REQUIRE(oracle.oai.size() == table.records.size());
    for (const auto& rec : table.records) {
      CAPTURE(m.name);
      CAPTURE(rec.soc_code);
      CHECK(std::fabs(rec.oai.to_double() - oracle.oai.at(rec.soc_code)) < 1e-12);
    }
    for (const auto& [task, ai] : table.task_indices) {
      CAPTURE(task);
      CHECK(std::fabs(ai.ai_task.to_double() - oracle.task_ai.at(task)) < 1e-12);
    }
  }
}

TEST_CASE("constant matrices pin every OAI to the constant") {
  Fixture f;
  const OaiTable zeros = oai::compute_all(f.tax, f.fused, constant_matrix(Rational(0), "zeros"));
  for (const auto& rec : zeros.records) CHECK(rec.oai == Rational(0));
  const OaiTable ones = oai::compute_all(f.tax, f.fused, constant_matrix(Rational(1), "ones"));
  for (const auto& rec : ones.records) CHECK(rec.oai == Rational(1));
}

TEST_CASE("unscored dwas fail loudly and name every missing id") {
  Fixture f;
  std::vector<oai::FusedScore> partial(f.fused.begin(), f.fused.end() - 2);
  try {
    oai::compute_all(f.tax, partial, oai::preset(Scenario::Baseline));
    FAIL("expected ComputeError");
  } catch (const oai::ComputeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("D019") != std::string::npos);
    CHECK(msg.find("D020") != std::string::npos);
  }
}

TEST_CASE("bottleneck bound: task index <= mean, equal iff all equal") {
  std::mt19937 gen(4242);
  std::uniform_int_distribution<int> size_dist(1, 6), value_dist(0, 10);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = size_dist(gen);
    std::map<std::string, Rational> ai;
    std::vector<std::string> ids;
    Rational sum(0);
    bool all_equal = true;
    Rational first;
    for (int i = 0; i < n; ++i) {
      const std::string id = "d" + std::to_string(i);
      const Rational v(value_dist(gen), 10);
      ids.push_back(id);
      ai[id] = v;
      sum += v;
      if (i == 0) first = v;
      all_equal = all_equal && v == first;
    }
    const auto rec = oai::task_index(make_task("T", ids), ai);
    const Rational mean = sum / Rational(n);
    CHECK(rec.ai_task <= mean);
    CHECK((rec.ai_task == mean) == all_equal);
  }
}

TEST_CASE("monotone pipeline: dominating matrices dominate every OAI") {
  Fixture f;
  std::mt19937 gen(7);
  std::uniform_int_distribution<int> tenths(0, 10);
  for (int trial = 0; trial < 20; ++trial) {
    MappingMatrix low, high;
    low.name = "low";
    high.name = "high";
    for (int t = 0; t <= 3; ++t)
      for (int r = 1; r <= 5; ++r) {
        const int a = tenths(gen), b = tenths(gen);
        low.cells[t][r - 1] = Rational(std::min(a, b), 10);
        high.cells[t][r - 1] = Rational(std::max(a, b), 10);
      }
    const OaiTable table_low = oai::compute_all(f.tax, f.fused, low);
    const OaiTable table_high = oai::compute_all(f.tax, f.fused, high);
    for (std::size_t i = 0; i < table_low.records.size(); ++i)
      CHECK(table_high.records[i].oai >= table_low.records[i].oai);
  }
  // And the presets themselves.
  const OaiTable agg = oai::compute_all(f.tax, f.fused, oai::preset(Scenario::Aggressive));
  const OaiTable base = oai::compute_all(f.tax, f.fused, oai::preset(Scenario::Baseline));
  const OaiTable cons = oai::compute_all(f.tax, f.fused, oai::preset(Scenario::Conservative));
  for (std::size_t i = 0; i < base.records.size(); ++i) {
    CHECK(agg.records[i].oai >= base.records[i].oai);
    CHECK(base.records[i].oai >= cons.records[i].oai);
  }
}

TEST_CASE("weights are scale-free: rescaling importances leaves OAI unchanged") {
  Fixture f;
  const OaiTable before = oai::compute_all(f.tax, f.fused, oai::preset(Scenario::Baseline));
  oai::Taxonomy scaled = f.tax;
  for (auto& [id, task] : scaled.tasks) task.importance *= Rational(13, 4);
  const OaiTable after = oai::compute_all(scaled, f.fused, oai::preset(Scenario::Baseline));
  for (std::size_t i = 0; i < before.records.size(); ++i)
    CHECK(before.records[i].oai == after.records[i].oai);
}

TEST_CASE("all task indices and OAIs stay inside [0,1]") {
  Fixture f;
  for (Scenario s : {Scenario::Baseline, Scenario::Aggressive, Scenario::Conservative}) {
    const OaiTable table = oai::compute_all(f.tax, f.fused, oai::preset(s));
    for (const auto& [id, rec] : table.task_indices)
      CHECK((rec.ai_task >= Rational(0) && rec.ai_task <= Rational(1)));
    for (const auto& rec : table.records) CHECK((rec.oai >= Rational(0) && rec.oai <= Rational(1)));
  }
}
