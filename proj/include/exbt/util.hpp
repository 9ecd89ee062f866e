#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace exbt {

/// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

/// Reads a whole file; throws Error(IoError) when unreadable.
std::string read_file(const std::filesystem::path& path);

/// Writes `data` (creating parent directories); throws Error(IoError).
void write_file(const std::filesystem::path& path, std::string_view data);

std::vector<std::string> split_lines(std::string_view text);

std::string trim(std::string_view s);

bool starts_with(std::string_view s, std::string_view prefix);
bool ends_with(std::string_view s, std::string_view suffix);

/// Last dot-separated segment (generic arguments stripped): "java.util.List<X>" -> "List".
std::string simple_type_name(std::string_view qualified);

/// Forward-slash path of `p` relative to `base`.
std::string relative_path(const std::filesystem::path& p, const std::filesystem::path& base);

std::string file_name(std::string_view path);

/// For member text cut out of a file (first line already unindented): removes
/// the indentation shared by the remaining lines.
std::string dedent_tail(std::string_view text);

}  // namespace exbt
