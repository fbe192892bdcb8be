#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace flakysieve {

// Reads a whole file; throws LoadError when it cannot be opened.
std::string read_file(const std::filesystem::path& path);

// Writes through a sibling temporary file and renames it into place, so
// readers never observe a partially written output.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

// Shortest decimal text that parses back to exactly `value`.
std::string format_float(float value);
std::string format_double(double value);

}  // namespace flakysieve
