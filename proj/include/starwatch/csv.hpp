#pragma once

#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "starwatch/errors.hpp"

namespace starwatch::csv {

// The formats this tool reads and writes never contain quoted fields
// (identifiers cannot hold commas), so a plain split suffices.
inline std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t begin = 0;
  while (true) {
    const std::size_t comma = line.find(',', begin);
    if (comma == std::string_view::npos) {
      out.emplace_back(line.substr(begin));
      return out;
    }
    out.emplace_back(line.substr(begin, comma - begin));
    begin = comma + 1;
  }
}

inline std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

// Reads a CSV file, skipping an optional header that starts with `header_prefix`.
template <typename RowFn>
void for_each_row(const std::string& path, std::string_view header_prefix, RowFn&& fn) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    line = strip_cr(std::move(line));
    if (line.empty()) continue;
    if (first && !header_prefix.empty() && line.rfind(header_prefix, 0) == 0) {
      first = false;
      continue;
    }
    first = false;
    fn(split_line(line));
  }
}

}  // namespace starwatch::csv
