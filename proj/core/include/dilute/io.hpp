#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dilute {

// RFC-4180 field quoting: fields containing comma, quote, or newline are
// wrapped in quotes with embedded quotes doubled.
std::string csv_escape(const std::string& field);
std::string csv_row(const std::vector<std::string>& fields);

// Shortest-round-trip-ish deterministic double formatting ("%.17g").
std::string double_repr(double v);

std::uint64_t fnv1a64(const std::string& data);
std::string hex64(std::uint64_t v);

}  // namespace dilute
