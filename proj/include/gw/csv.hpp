#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace gw::csv {

using Record = std::vector<std::string>;

// RFC-4180 style reader. A quote is only special at the start of a field;
// characters following a closing quote are appended literally. Records may
// end in LF, CRLF or CR. Blank lines are skipped. A leading UTF-8 BOM is
// dropped. Unterminated quotes raise MalformedCsv.
std::vector<Record> parse(std::string_view bytes, char delimiter = ',');

// Quotes a field when it is empty or contains the delimiter, a quote, CR or LF.
std::string quote_field(std::string_view field, char delimiter = ',');

}  // namespace gw::csv
