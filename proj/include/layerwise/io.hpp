#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace lw {

/// Reads a whole file as bytes.
std::string read_file(const std::filesystem::path& path);

/// Writes `contents` to a temporary file next to `path`, then renames it, so
/// readers never observe a partially written file at `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace lw
