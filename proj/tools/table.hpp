#pragma once

// CSV tables: comma separated, one header line, numbers printed with %.10g,
// non-finite numbers as "nan"/"inf"/"-inf", strings quoted only when needed.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "nevlab/error.hpp"

namespace nevlab::cli {

inline std::string fmt_num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row) {
    if (row.size() != columns.size()) throw Error("table row width does not match the header");
    rows.push_back(std::move(row));
  }

  std::string to_csv() const {
    std::string out;
    for (std::size_t c = 0; c < columns.size(); ++c) out += (c ? "," : "") + csv_field(columns[c]);
    out += '\n';
    for (const auto& row : rows) {
      for (std::size_t c = 0; c < row.size(); ++c) out += (c ? "," : "") + csv_field(row[c]);
      out += '\n';
    }
    return out;
  }

  std::size_t column(const std::string& name) const {
    for (std::size_t c = 0; c < columns.size(); ++c)
      if (columns[c] == name) return c;
    std::string all;
    for (const auto& c : columns) all += (all.empty() ? "" : ", ") + c;
    throw ConfigError("column '" + name + "' not found; available: " + all);
  }

  std::vector<double> numbers(const std::string& name) const {
    const std::size_t c = column(name);
    std::vector<double> out;
    for (const auto& row : rows) {
      const std::string& s = row[c];
      if (s == "nan" || s.empty()) out.push_back(std::nan(""));
      else if (s == "inf") out.push_back(INFINITY);
      else if (s == "-inf") out.push_back(-INFINITY);
      else if (s == "true") out.push_back(1.0);
      else if (s == "false") out.push_back(0.0);
      else {
        std::size_t used = 0;
        double v = 0.0;
        try {
          v = std::stod(s, &used);
        } catch (const std::exception&) {
          used = 0;
        }
        if (used != s.size()) throw DataError("column '" + name + "' holds a non-numeric value '" + s + "'");
        out.push_back(v);
      }
    }
    return out;
  }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

inline Table read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open table '" + path + "'");
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw DataError("table '" + path + "' is empty");
  t.columns = split_csv_line(line);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto row = split_csv_line(line);
    if (row.size() != t.columns.size())
      throw DataError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(t.columns.size()) +
                      " fields, found " + std::to_string(row.size()));
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace nevlab::cli
