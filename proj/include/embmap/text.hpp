#pragma once

#include <charconv>
#include <cstdio>
#include <string>

namespace embmap {

// Shortest decimal form that parses back to the exact same double.
inline std::string format_exact(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// Fixed 9 significant digits, the embedding-file precision.
inline std::string format_g9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return std::string(buf);
}

}  // namespace embmap
