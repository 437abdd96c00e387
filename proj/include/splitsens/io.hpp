#pragma once

// CSV output and input. Results are written with every digit a double
// carries (17 significant digits round-trip exactly), preceded by comment
// lines echoing the fully resolved configuration so a result file is
// self-describing and reruns can be compared byte for byte.
//
// Writes go through a temporary file in the same directory followed by a
// rename, so a crash mid-write never leaves a truncated file behind under
// the target name.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "splitsens/core.hpp"

namespace splitsens {

inline std::string fmt17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

struct CsvTable {
  std::vector<std::pair<std::string, std::string>> header;  // echoed as "# key = value"
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

inline void write_csv(const std::string& path, const CsvTable& table) {
  namespace fs = std::filesystem;
  fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw config_error("cannot open '" + tmp.string() + "' for writing");
    for (const auto& [k, v] : table.header) out << "# " << k << " = " << v << "\n";
    for (std::size_t c = 0; c < table.columns.size(); ++c)
      out << (c ? "," : "") << table.columns[c];
    out << "\n";
    for (const auto& row : table.rows) {
      for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << row[c];
      out << "\n";
    }
    out.flush();
    if (!out) throw config_error("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, target);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open '" + path + "'");
  CsvTable t;
  std::string line;
  bool have_columns = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::string body = line.substr(1);
      auto eq = body.find('=');
      if (eq != std::string::npos) {
        auto strip = [](std::string s) {
          auto a = s.find_first_not_of(" \t");
          auto b = s.find_last_not_of(" \t\r");
          return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        t.header.emplace_back(strip(body.substr(0, eq)), strip(body.substr(eq + 1)));
      }
      continue;
    }
    if (!have_columns) {
      t.columns = split_csv_line(line);
      have_columns = true;
    } else {
      t.rows.push_back(split_csv_line(line));
    }
  }
  return t;
}

// Column lookup helper for consumers of read_csv.
inline int csv_column(const CsvTable& t, const std::string& name) {
  for (std::size_t i = 0; i < t.columns.size(); ++i)
    if (t.columns[i] == name) return static_cast<int>(i);
  throw config_error("column '" + name + "' not found in CSV");
}

}  // namespace splitsens
