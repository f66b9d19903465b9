#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace anb::csv {

// Shortest text that parses back to the same double; "nan"/"inf" for
// non-finite values.
std::string format_number(double value);

// Quotes fields containing commas, quotes or line breaks.
std::string escape_field(std::string_view field);

void write_row(std::ostream &out, const std::vector<std::string> &fields);

// One record without the trailing newline. Throws FormatError (malformed) on
// an unterminated quote.
std::vector<std::string> parse_row(std::string_view line);

} // namespace anb::csv
