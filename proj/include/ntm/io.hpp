#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace ntm::io {

// Whole-file read; gzip-compressed files are decompressed transparently.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

// Splits on '\n', dropping a trailing '\r'. A final newline does not produce
// an extra empty line.
std::vector<std::string_view> split_lines(std::string_view text);

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

}  // namespace ntm::io
