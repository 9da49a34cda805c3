#pragma once

#include <charconv>
#include <cmath>
#include <string>

namespace kgard {

/// Shortest decimal form that round-trips; "inf"/"-inf"/"nan" otherwise.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace kgard
