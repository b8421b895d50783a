#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace perfcast::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  // 1-based line number in the source file for each row (for error messages).
  std::vector<std::size_t> lines;

  std::optional<std::size_t> column(std::string_view name) const;
  std::size_t require_column(std::string_view name, std::string_view context) const;
};

/// Reads a header-led CSV file. Blank lines are skipped; quoted fields are
/// supported; rows shorter than the header are padded with empty fields.
/// Throws InputError on a missing file or rows longer than the header.
Table read(const std::filesystem::path& path);
Table parse(std::istream& in, std::string_view source_name);

double parse_double(std::string_view cell, std::string_view context);
long long parse_int(std::string_view cell, std::string_view context);

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double value);

/// Joins fields with commas, quoting any that contain separators or quotes.
std::string join(const std::vector<std::string>& fields);

} // namespace perfcast::csv
