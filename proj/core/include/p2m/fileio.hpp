#pragma once

#include <string>
#include <string_view>

namespace p2m {

/// Writes to a sibling temporary file and renames it into place.
void write_file_atomic(const std::string& path, std::string_view content);

}  // namespace p2m
