#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace knowtrace {

std::string_view trim(std::string_view text);

std::string to_lower_ascii(std::string_view text);

/// Lowercases, trims and collapses internal whitespace runs to one space.
/// Unlike normalize_entity this accepts (and may return) an empty string.
std::string normalize_text(std::string_view text);

/// Splits on '\n'; a trailing '\r' is stripped from each line.
std::vector<std::string_view> split_lines(std::string_view text);

bool is_ascii_alnum(char c);

bool starts_with_ci(std::string_view text, std::string_view prefix);

/// Number of maximal non-whitespace runs.
std::size_t whitespace_token_count(std::string_view text);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);

/// 16 lowercase hex digits.
std::string fnv1a64_hex(std::string_view bytes);

std::string read_file(const std::filesystem::path& path);

/// Creates parent directories as needed and truncates.
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace knowtrace
