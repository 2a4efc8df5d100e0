#pragma once

#include <filesystem>
#include <string>

namespace mvsde {

/// Shortest decimal string that parses back to exactly v.
std::string format_double(double v);

void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace mvsde
