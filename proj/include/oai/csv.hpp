#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "oai/common.hpp"

namespace oai {

struct CsvRecord {
  std::size_t line = 0;  // 1-based line where the record starts
  std::vector<std::string> fields;
};

// RFC-4180 parser: comma-delimited, double-quote quoting, "" escapes,
// fields may contain commas and newlines when quoted. CRLF and LF accepted.
inline std::vector<CsvRecord> parse_csv(std::string_view text, const std::string& source) {
  std::vector<CsvRecord> records;
  std::size_t line = 1;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    CsvRecord rec;
    rec.line = line;
    std::string field;
    bool in_quotes = false;
    bool record_done = false;
    bool quoted_field = false;
    while (i <= n && !record_done) {
      if (i == n) {
        rec.fields.push_back(field);
        if (in_quotes) throw ValidationError(source + ": unterminated quoted field starting near line " + std::to_string(rec.line));
        record_done = true;
        break;
      }
      char c = text[i];
      if (in_quotes) {
        if (c == '"') {
          if (i + 1 < n && text[i + 1] == '"') {
            field += '"';
            i += 2;
          } else {
            in_quotes = false;
            ++i;
          }
        } else {
          if (c == '\n') ++line;
          field += c;
          ++i;
        }
      } else {
        switch (c) {
          case '"':
            if (!field.empty() || quoted_field)
              throw ValidationError(source + ": stray quote at line " + std::to_string(line));
            in_quotes = true;
            quoted_field = true;
            ++i;
            break;
          case ',':
            rec.fields.push_back(field);
            field.clear();
            quoted_field = false;
            ++i;
            break;
          case '\r':
            if (i + 1 < n && text[i + 1] == '\n') {
              rec.fields.push_back(field);
              record_done = true;
              ++line;
              i += 2;
            } else {
              field += c;
              ++i;
            }
            break;
          case '\n':
            rec.fields.push_back(field);
            record_done = true;
            ++line;
            ++i;
            break;
          default:
            if (quoted_field)
              throw ValidationError(source + ": content after closing quote at line " + std::to_string(line));
            field += c;
            ++i;
        }
      }
    }
    // Skip a fully empty trailing record (file ends with newline).
    if (rec.fields.size() == 1 && rec.fields[0].empty() && i >= n) break;
    records.push_back(std::move(rec));
  }
  return records;
}

inline std::vector<CsvRecord> read_csv_file(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ValidationError("missing file: " + path.string());
  return parse_csv(read_file(path), path.filename().string());
}

inline std::string csv_escape(const std::string& field) {
  bool needs_quotes = field.find_first_of(",\"\n\r") != std::string::npos;
  if (!needs_quotes) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline std::string csv_row(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += csv_escape(fields[i]);
  }
  out += '\n';
  return out;
}

}  // namespace oai
