#pragma once

#include <string>

namespace doctor {

// Shortest decimal representation that parses back bit-exactly.
// Used by every text format we emit (datasets, checkpoints, CSV).
std::string format_double(double v);

double parse_double(const std::string& s);

bool is_finite(double v);

}  // namespace doctor
