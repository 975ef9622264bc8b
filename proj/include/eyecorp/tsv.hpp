#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace eyecorp::tsv {

/// A parsed tab-separated file: one header row, then data rows of the same
/// width. Lines starting with '#' are comments and are skipped.
struct Table {
  std::string source;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;  // 1-based, parallel to rows

  std::optional<std::size_t> find_column(std::string_view name) const;
  /// Column index by name; DataError naming the source when absent.
  std::size_t column(std::string_view name) const;

  /// "source:line: message", for row-level diagnostics.
  std::string where(std::size_t row) const;

  double number(std::size_t row, std::size_t col) const;
  /// "NA" maps to nullopt, "inf" to +infinity.
  std::optional<double> optional_number(std::size_t row, std::size_t col) const;
  long long integer(std::size_t row, std::size_t col) const;
};

std::vector<std::string> split(std::string_view line, char sep = '\t');

Table parse(std::string_view text, std::string source);
Table read_file(const std::filesystem::path& path);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view content);

/// Shortest representation that round-trips; "NA" for NaN, "inf"/"-inf".
std::string format_number(double value);
std::string format_optional(const std::optional<double>& value);

}  // namespace eyecorp::tsv

namespace eyecorp {

/// Identifier order that compares embedded digit runs numerically, so
/// "s2" < "s10". Falls back to plain comparison on ties.
bool natural_less(std::string_view a, std::string_view b);

}  // namespace eyecorp
