#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace ctxrec::io {

/// Writes `content` to a sibling temporary file and renames it over `path`,
/// so readers never observe a partially written file.
void write_file_atomically(const std::filesystem::path& path, std::string_view content);

/// Whole file as bytes. Throws ParseError when it cannot be opened.
std::string read_file(const std::filesystem::path& path);

/// Lines without their terminators ("\n" or "\r\n").
std::vector<std::string_view> split_lines(std::string_view text);

/// Splits on a single delimiter, keeping empty fields.
std::vector<std::string_view> split_fields(std::string_view line, char delimiter);

std::string_view trim(std::string_view s);

}  // namespace ctxrec::io
