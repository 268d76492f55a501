#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

namespace klsal::io {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

/// Writes to a sibling temp file then renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_file_atomic(const std::filesystem::path& path, std::string_view text);

}  // namespace klsal::io
