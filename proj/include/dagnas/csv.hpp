#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace dagnas::csv {

/// Shortest decimal text that parses back to exactly `value`; "inf"/"-inf"/"nan"
/// for non-finite values.
std::string format_double(double value);

/// Throws std::invalid_argument unless the whole field is a number.
double parse_double(std::string_view field);
long long parse_int(std::string_view field);

/// Splits on commas and trims surrounding blanks. No quoting support; none of
/// the files this library writes need it.
std::vector<std::string> split_line(std::string_view line);

}  // namespace dagnas::csv
