#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "oai/common.hpp"
#include "oai/rational.hpp"

namespace oai {

enum class Scenario { Baseline, Aggressive, Conservative, Custom };

inline const char* scenario_name(Scenario s) {
  switch (s) {
    case Scenario::Baseline: return "baseline";
    case Scenario::Aggressive: return "aggressive";
    case Scenario::Conservative: return "conservative";
    case Scenario::Custom: return "custom";
  }
  return "custom";
}

// Total function from (tech 0..3, risk 1..5) to an automation index in [0,1].
// Immutable after construction; lookups are pure.
struct MappingMatrix {
  std::string name;
  std::array<std::array<Rational, 5>, 4> cells;  // [tech][risk - 1]

  const Rational& at(int tech, int risk) const {
    if (tech < 0 || tech > 3) throw ComputeError("tech level out of range: " + std::to_string(tech));
    if (risk < 1 || risk > 5) throw ComputeError("risk score out of range: " + std::to_string(risk));
    return cells[static_cast<std::size_t>(tech)][static_cast<std::size_t>(risk - 1)];
  }
};

inline Rational automation_index(const MappingMatrix& m, int tech, int risk) {
  return m.at(tech, risk);
}

inline MappingMatrix preset(Scenario s) {
  const Rational z(0), c3(3, 10), c5(1, 2), c7(7, 10), one(1);
  MappingMatrix m;
  m.name = scenario_name(s);
  // Baseline: high risk degrades capability stepwise, R=5 and T=0 veto to 0.
  m.cells = {{
      {z, z, z, z, z},        // T=0
      {c3, c3, c3, z, z},     // T=1
      {c7, c7, c5, c3, z},    // T=2
      {one, one, c7, c3, z},  // T=3
  }};
  switch (s) {
    case Scenario::Baseline:
      break;
    case Scenario::Aggressive:
      // High-risk-tolerance deviations; the R=5 veto is retained.
      m.cells[3][2] = one;  // (3,3)
      m.cells[3][3] = c7;   // (3,4)
      break;
    case Scenario::Conservative:
      // Strict regulation: any R>=4 cell is banned outright.
      for (auto& row : m.cells) {
        row[3] = z;
        row[4] = z;
      }
      break;
    case Scenario::Custom:
      throw ComputeError("no preset for custom scenario");
  }
  return m;
}

// Pairs (tech, risk, message) describing ordering violations. Violations are
// advisory for user-supplied matrices, never for presets.
inline std::vector<std::string> monotonicity_warnings(const MappingMatrix& m) {
  std::vector<std::string> warnings;
  for (int t = 0; t <= 3; ++t) {
    for (int r = 1; r < 5; ++r) {
      if (m.at(t, r + 1) > m.at(t, r))
        warnings.push_back("cell (T=" + std::to_string(t) + ",R=" + std::to_string(r + 1) +
                           ") exceeds (T=" + std::to_string(t) + ",R=" + std::to_string(r) +
                           "): not non-increasing in risk");
    }
  }
  for (int r = 1; r <= 5; ++r) {
    for (int t = 0; t < 3; ++t) {
      if (m.at(t + 1, r) < m.at(t, r))
        warnings.push_back("cell (T=" + std::to_string(t + 1) + ",R=" + std::to_string(r) +
                           ") is below (T=" + std::to_string(t) + ",R=" + std::to_string(r) +
                           "): not non-decreasing in tech");
    }
  }
  return warnings;
}

// matrix.json: {"name": "...", "cells": [[R1..R5 for T=0], ..., [for T=3]]}.
// Cell values are decimals with at most 9 digits after the point and are
// recovered as exact rationals. Totality and range are errors; monotonicity
// violations are returned as warnings.
inline MappingMatrix load_matrix(const std::filesystem::path& path,
                                 std::vector<std::string>* warnings = nullptr) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path.string() + ": malformed JSON: " + e.what());
  }
  if (!doc.is_object() || !doc.contains("cells"))
    throw ValidationError(path.string() + ": expected object with \"cells\"");
  MappingMatrix m;
  m.name = doc.value("name", "custom");
  const auto& rows = doc["cells"];
  if (!rows.is_array() || rows.size() != 4)
    throw ValidationError(path.string() + ": \"cells\" must have 4 rows (T=0..3)");
  for (std::size_t t = 0; t < 4; ++t) {
    const auto& row = rows[t];
    if (!row.is_array() || row.size() != 5)
      throw ValidationError(path.string() + ": row T=" + std::to_string(t) + " must have 5 cells (R=1..5)");
    for (std::size_t r = 0; r < 5; ++r) {
      if (!row[r].is_number())
        throw ValidationError(path.string() + ": cell (T=" + std::to_string(t) + ",R=" +
                              std::to_string(r + 1) + ") is not a number");
      Rational v = Rational::from_double_decimal9(row[r].get<double>());
      if (v < Rational(0) || v > Rational(1))
        throw ValidationError(path.string() + ": cell (T=" + std::to_string(t) + ",R=" +
                              std::to_string(r + 1) + ") outside [0,1]");
      m.cells[t][r] = v;
    }
  }
  auto warn = monotonicity_warnings(m);
  if (warnings) *warnings = std::move(warn);
  return m;
}

}  // namespace oai
