#pragma once

#include <charconv>
#include <cstdio>
#include <string>
#include <vector>

#include "qdplan/errors.hpp"

namespace qdplan {

// 17 significant digits: enough for bit-exact double round trips.
inline std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& s) {
  try {
    size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw CorruptFileError("trailing characters in number: '" + s + "'");
    return v;
  } catch (const std::invalid_argument&) {
    throw CorruptFileError("not a number: '" + s + "'");
  } catch (const std::out_of_range&) {
    throw CorruptFileError("number out of range: '" + s + "'");
  }
}

inline long long parse_int(const std::string& s) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw CorruptFileError("not an integer: '" + s + "'");
  return v;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace qdplan
