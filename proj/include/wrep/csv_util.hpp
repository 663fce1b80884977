#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace wrep::csv {

/// %.17g formatting; parses back to the identical double.
std::string format_double(double v);

/// Splits on ',' and trims surrounding blanks and a trailing '\r'.
std::vector<std::string_view> split_fields(std::string_view line);

/// Strict parse of the whole field. Returns false on any leftover text.
bool parse_double(std::string_view field, double& out);
bool parse_u64(std::string_view field, unsigned long long& out);

}  // namespace wrep::csv
