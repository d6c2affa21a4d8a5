#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace jcce {

/// Shortest text that still carries 17 significant digits ("%.17g").
std::string format_double(double x);
/// Strict parse; throws DataError on trailing garbage.
double parse_double(const std::string& text);

/// RFC 4180 quoting: fields with separators, quotes or newlines are quoted.
void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);
std::vector<std::vector<std::string>> read_csv(std::istream& in);

}  // namespace jcce
