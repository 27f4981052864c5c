#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace gfair {

// Shortest round-trip decimal text (at least 12 significant digits).
std::string format_double(double value);

std::vector<std::string> split_fields(std::string_view line, char delimiter);

// Writes to `<path>.tmp` and renames over `path`.
void write_file_atomic(const std::string& path, const std::string& contents);

std::string read_file(const std::string& path);

}  // namespace gfair
