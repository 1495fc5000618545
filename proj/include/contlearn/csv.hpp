#pragma once

#include <cstdio>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace contlearn::csv {

/// 10 significant digits, '.' decimal point, independent of the locale.
inline std::string number(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", value);
  std::string s(buf);
  for (auto& c : s)
    if (c == ',') c = '.';
  return s;
}

/// Leading '#' lines carry the resolved configuration and code version; the
/// body below them is deterministic.
inline void write_meta(std::ostream& out, const nlohmann::ordered_json& meta) {
  out << "# contlearn " << CONTLEARN_VERSION << '\n';
  out << "# config " << meta.dump() << '\n';
}

inline std::vector<std::string> split(const std::string& line, char sep = ',') {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

/// Reads a CSV with '#' meta lines and a header row; returns header + rows.
inline std::vector<std::vector<std::string>> read(std::istream& in, std::vector<std::string>& header) {
  std::vector<std::vector<std::string>> rows;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!have_header) {
      header = split(line);
      have_header = true;
      continue;
    }
    rows.push_back(split(line));
  }
  return rows;
}

}  // namespace contlearn::csv
