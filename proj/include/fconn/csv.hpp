#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace fconn::csv {

// Splits one CSV record into fields. Handles RFC-4180 double-quote escaping;
// embedded newlines inside quoted fields are not supported.
std::vector<std::string> split_record(std::string_view line);

// Quotes a field when it contains a comma, quote, CR or LF.
std::string quote(std::string_view field);

void write_record(std::ostream& out, const std::vector<std::string>& fields);

// Shortest round-trip decimal representation.
std::string format_double(double value);

}  // namespace fconn::csv
