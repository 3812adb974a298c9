#include "doctor/numeric.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>

#include "doctor/errors.hpp"

namespace doctor {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw UsageError("not a number: '" + s + "'");
  }
  return v;
}

bool is_finite(double v) { return std::isfinite(v); }

}  // namespace doctor
