#pragma once

#include <filesystem>
#include <string>

namespace optolev {

// Shortest round-trippable decimal form (17 significant digits).
std::string fmt17(double x);

// Writes content to path via a temp file + rename so readers never observe a
// partially written file.
void write_text_atomic(const std::filesystem::path& path,
                       const std::string& content);

double magnitude_db(double abs_value);

}  // namespace optolev
