#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "oai/csv.hpp"
#include "oai/prng.hpp"
#include "oai/rational.hpp"

namespace oai {

// One model's rating of one DWA.
struct ScoreRecord {
  std::string dwa_id;
  std::string model_id;
  int tech_level = 0;   // 0..3
  int risk_score = 1;   // 1..5
  std::string reasoning;
};

enum class Stratum { Consensus, SlightFriction, SevereDivergence };

inline const char* stratum_name(Stratum s) {
  switch (s) {
    case Stratum::Consensus: return "consensus";
    case Stratum::SlightFriction: return "slight_friction";
    case Stratum::SevereDivergence: return "severe_divergence";
  }
  return "consensus";
}

inline Stratum parse_stratum(const std::string& name) {
  if (name == "consensus") return Stratum::Consensus;
  if (name == "slight_friction") return Stratum::SlightFriction;
  if (name == "severe_divergence") return Stratum::SevereDivergence;
  throw ValidationError("unknown stratum \"" + name + "\"");
}

// Inter-model risk variance strata. Boundaries are exact rationals:
// 0 -> consensus, (0, 1/3) -> slight friction, >= 1/3 -> severe divergence.
inline Stratum assign_stratum(const Rational& risk_variance) {
  if (risk_variance < Rational(0)) throw ComputeError("negative variance");
  if (risk_variance.is_zero()) return Stratum::Consensus;
  if (risk_variance < Rational(1, 3)) return Stratum::SlightFriction;
  return Stratum::SevereDivergence;
}

struct FusedScore {
  std::string dwa_id;
  int n_models = 0;
  Rational mean_tech;
  Rational mean_risk;
  int tech_level = 0;       // round(mean_tech), ties away from zero
  int risk_score = 1;       // round(mean_risk), ties away from zero
  Rational risk_variance;   // sample variance, divisor n-1, 0 when n=1
  Rational tech_variance;   // recorded, not part of the CSV schema
  Stratum stratum = Stratum::Consensus;
};

namespace detail {

// Sample variance of integers with divisor n-1: (n*sum(v^2) - sum(v)^2) / (n*(n-1)).
inline Rational sample_variance(const std::vector<int>& values) {
  const auto n = static_cast<std::int64_t>(values.size());
  if (n <= 1) return Rational(0);
  std::int64_t sum = 0, sum_sq = 0;
  for (int v : values) {
    sum += v;
    sum_sq += static_cast<std::int64_t>(v) * v;
  }
  return Rational(n * sum_sq - sum * sum, n * (n - 1));
}

}  // namespace detail

// Consensus over one DWA's per-model records. Means are exact rationals over
// n; integer scores use nearest-integer rounding with .5 ties away from zero.
// Human expert ratings never adjust these values (no +0.35 calibration); the
// high-risk penalty lives in the mapping matrix alone.
inline FusedScore fuse_scores(std::span<const ScoreRecord> records) {
  if (records.empty()) throw ComputeError("fuse_scores: empty record list");
  FusedScore fused;
  fused.dwa_id = records.front().dwa_id;
  std::set<std::string> models;
  std::vector<int> techs, risks;
  std::int64_t tech_sum = 0, risk_sum = 0;
  for (const auto& rec : records) {
    if (rec.dwa_id != fused.dwa_id)
      throw ComputeError("fuse_scores: mixed dwa_ids (\"" + fused.dwa_id + "\" vs \"" + rec.dwa_id + "\")");
    if (!models.insert(rec.model_id).second)
      throw ComputeError("fuse_scores: duplicate model \"" + rec.model_id + "\" for dwa \"" + rec.dwa_id + "\"");
    if (rec.tech_level < 0 || rec.tech_level > 3)
      throw ValidationError("tech_level out of range for dwa \"" + rec.dwa_id + "\"");
    if (rec.risk_score < 1 || rec.risk_score > 5)
      throw ValidationError("risk_score out of range for dwa \"" + rec.dwa_id + "\"");
    techs.push_back(rec.tech_level);
    risks.push_back(rec.risk_score);
    tech_sum += rec.tech_level;
    risk_sum += rec.risk_score;
  }
  const auto n = static_cast<std::int64_t>(records.size());
  fused.n_models = static_cast<int>(n);
  fused.mean_tech = Rational(tech_sum, n);
  fused.mean_risk = Rational(risk_sum, n);
  fused.tech_level = static_cast<int>(fused.mean_tech.round_half_away_from_zero());
  fused.risk_score = static_cast<int>(fused.mean_risk.round_half_away_from_zero());
  fused.tech_variance = detail::sample_variance(techs);
  fused.risk_variance = detail::sample_variance(risks);
  fused.stratum = assign_stratum(fused.risk_variance);
  return fused;
}

// Groups raw records by dwa_id and fuses each group; result sorted by dwa_id.
inline std::vector<FusedScore> fuse_all(const std::vector<ScoreRecord>& records) {
  std::map<std::string, std::vector<ScoreRecord>> by_dwa;
  for (const auto& rec : records) by_dwa[rec.dwa_id].push_back(rec);
  std::vector<FusedScore> fused;
  fused.reserve(by_dwa.size());
  for (const auto& [id, group] : by_dwa) fused.push_back(fuse_scores(group));
  return fused;
}

struct StrataSample {
  std::uint64_t seed = 0;
  std::map<Stratum, std::size_t> requested;
  std::map<Stratum, std::vector<std::string>> drawn;  // in draw order
  std::vector<std::string> warnings;                  // clamped strata
};

// Deterministic stratified draw. One SplitMix64 generator seeded once; strata
// are processed in fixed order (consensus, slight_friction, severe_divergence),
// each as a Fisher-Yates partial shuffle over its lexicographically sorted
// dwa_id list. Identical (inputs, seed) reproduce identical samples anywhere.
inline StrataSample stratified_sample(const std::vector<FusedScore>& fused,
                                      const std::map<Stratum, std::size_t>& counts,
                                      std::uint64_t seed) {
  StrataSample sample;
  sample.seed = seed;
  sample.requested = counts;
  std::map<Stratum, std::vector<std::string>> pools;
  for (const auto& f : fused) pools[f.stratum].push_back(f.dwa_id);
  SplitMix64 rng(seed);
  for (Stratum s : {Stratum::Consensus, Stratum::SlightFriction, Stratum::SevereDivergence}) {
    auto req_it = counts.find(s);
    const std::size_t requested = req_it == counts.end() ? 0 : req_it->second;
    auto& pool = pools[s];
    std::sort(pool.begin(), pool.end());
    if (requested > pool.size())
      sample.warnings.push_back(std::string(stratum_name(s)) + ": requested " + std::to_string(requested) +
                                " but stratum has " + std::to_string(pool.size()) + "; clamped");
    sample.drawn[s] = partial_shuffle_take(pool, requested, rng);
  }
  return sample;
}

// --- File formats -----------------------------------------------------------

// scores.csv: dwa_id,model_id,tech_level,risk_score,reasoning
inline std::vector<ScoreRecord> read_scores_csv(const std::filesystem::path& path) {
  auto records = read_csv_file(path);
  const std::string file = path.filename().string();
  if (records.empty() || records.front().fields != std::vector<std::string>{"dwa_id", "model_id", "tech_level", "risk_score", "reasoning"})
    throw ValidationError(file + ": expected header \"dwa_id,model_id,tech_level,risk_score,reasoning\"");
  std::vector<ScoreRecord> out;
  std::set<std::pair<std::string, std::string>> seen;
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto& rec = records[i];
    if (rec.fields.size() != 5)
      throw ValidationError(file + ":" + std::to_string(rec.line) + ": expected 5 columns");
    ScoreRecord sr;
    sr.dwa_id = rec.fields[0];
    sr.model_id = rec.fields[1];
    if (sr.dwa_id.empty() || sr.model_id.empty())
      throw ValidationError(file + ":" + std::to_string(rec.line) + ": empty dwa_id or model_id");
    try {
      sr.tech_level = static_cast<int>(std::stol(rec.fields[2]));
      sr.risk_score = static_cast<int>(std::stol(rec.fields[3]));
    } catch (const std::exception&) {
      throw ValidationError(file + ":" + std::to_string(rec.line) + ": unparseable score");
    }
    if (sr.tech_level < 0 || sr.tech_level > 3)
      throw ValidationError(file + ":" + std::to_string(rec.line) + ": tech_level out of range");
    if (sr.risk_score < 1 || sr.risk_score > 5)
      throw ValidationError(file + ":" + std::to_string(rec.line) + ": risk_score out of range");
    sr.reasoning = rec.fields[4];
    if (!seen.insert({sr.dwa_id, sr.model_id}).second)
      throw ValidationError(file + ":" + std::to_string(rec.line) + ": duplicate (dwa_id, model_id) pair (" +
                            sr.dwa_id + ", " + sr.model_id + ")");
    out.push_back(std::move(sr));
  }
  return out;
}

inline const char* kFusedHeader = "dwa_id,n_models,mean_tech,mean_risk,tech_level,risk_score,risk_variance,stratum";

// fused.csv: means to 4 decimals, variance to 6, both half-away-from-zero.
inline void write_fused_csv(const std::filesystem::path& path, const std::vector<FusedScore>& fused) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << kFusedHeader << "\n";
  for (const auto& f : fused) {
    out << csv_row({f.dwa_id, std::to_string(f.n_models), f.mean_tech.to_decimal_string(4),
                    f.mean_risk.to_decimal_string(4), std::to_string(f.tech_level),
                    std::to_string(f.risk_score), f.risk_variance.to_decimal_string(6),
                    stratum_name(f.stratum)});
  }
  if (!out) throw IoError("write failed: " + path.string());
}

inline std::vector<FusedScore> read_fused_csv(const std::filesystem::path& path) {
  auto records = read_csv_file(path);
  const std::string file = path.filename().string();
  if (records.empty() || csv_row(records.front().fields) != std::string(kFusedHeader) + "\n")
    throw ValidationError(file + ": expected header \"" + kFusedHeader + "\"");
  std::vector<FusedScore> out;
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto& rec = records[i];
    if (rec.fields.size() != 8)
      throw ValidationError(file + ":" + std::to_string(rec.line) + ": expected 8 columns");
    FusedScore f;
    f.dwa_id = rec.fields[0];
    try {
      f.n_models = static_cast<int>(std::stol(rec.fields[1]));
      f.mean_tech = Rational::from_decimal(rec.fields[2]);
      f.mean_risk = Rational::from_decimal(rec.fields[3]);
      f.tech_level = static_cast<int>(std::stol(rec.fields[4]));
      f.risk_score = static_cast<int>(std::stol(rec.fields[5]));
      f.risk_variance = Rational::from_decimal(rec.fields[6]);
    } catch (const std::exception&) {
      throw ValidationError(file + ":" + std::to_string(rec.line) + ": unparseable fused row");
    }
    f.stratum = parse_stratum(rec.fields[7]);
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace oai
