#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace flakysieve::csv {

struct Record {
  std::vector<std::string> fields;
  std::size_t line = 0;  // 1-based line where the record starts
};

// Parses RFC 4180 CSV: comma separated, double-quote quoting with "" as the
// escape, quoted fields may span lines, LF or CRLF record terminators.
// Throws LoadError on an unterminated quoted field or stray quote.
std::vector<Record> parse(std::string_view text);

// Appends one field, quoting it when needed or when `force_quote` is set.
void append_field(std::string& out, std::string_view field, bool force_quote = false);

}  // namespace flakysieve::csv
