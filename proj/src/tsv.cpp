#include "eyecorp/tsv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>

#include "eyecorp/error.hpp"

namespace eyecorp::tsv {

std::optional<std::size_t> Table::find_column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  return std::nullopt;
}

std::size_t Table::column(std::string_view name) const {
  if (auto i = find_column(name)) return *i;
  throw DataError(fmt::format("{}: missing column '{}'", source, name));
}

std::string Table::where(std::size_t row) const {
  return fmt::format("{}:{}", source, line_numbers.at(row));
}

double Table::number(std::size_t row, std::size_t col) const {
  auto v = optional_number(row, col);
  if (!v) throw DataError(fmt::format("{}: column '{}' is NA", where(row), header[col]));
  return *v;
}

std::optional<double> Table::optional_number(std::size_t row, std::size_t col) const {
  const std::string& cell = rows.at(row).at(col);
  if (cell == "NA") return std::nullopt;
  if (cell == "inf") return std::numeric_limits<double>::infinity();
  if (cell == "-inf") return -std::numeric_limits<double>::infinity();
  double value = 0.0;
  const char* first = cell.data();
  const char* last = first + cell.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || cell.empty())
    throw DataError(fmt::format("{}: column '{}': not a number: '{}'", where(row), header[col], cell));
  return value;
}

long long Table::integer(std::size_t row, std::size_t col) const {
  const std::string& cell = rows.at(row).at(col);
  long long value = 0;
  const char* last = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(cell.data(), last, value);
  if (ec != std::errc{} || ptr != last || cell.empty())
    throw DataError(fmt::format("{}: column '{}': not an integer: '{}'", where(row), header[col], cell));
  return value;
}

std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(line.substr(start));
      return out;
    }
    out.emplace_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

Table parse(std::string_view text, std::string source) {
  Table table;
  table.source = std::move(source);
  std::size_t line_no = 0;
  std::size_t start = 0;
  bool have_header = false;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    auto cells = split(line);
    if (!have_header) {
      table.header = std::move(cells);
      have_header = true;
      continue;
    }
    if (cells.size() != table.header.size())
      throw DataError(fmt::format("{}:{}: expected {} columns, found {}", table.source, line_no,
                                  table.header.size(), cells.size()));
    table.rows.push_back(std::move(cells));
    table.line_numbers.push_back(line_no);
  }
  if (!have_header) throw DataError(fmt::format("{}: missing header row", table.source));
  return table;
}

Table read_file(const std::filesystem::path& path) { return parse(read_text(path), path.string()); }

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open '{}'", path.string()));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return std::move(buffer).str();
}

void write_text(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(fmt::format("cannot write '{}'", path.string()));
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw DataError(fmt::format("write failed for '{}'", path.string()));
}

std::string format_number(double value) {
  if (std::isnan(value)) return "NA";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

std::string format_optional(const std::optional<double>& value) {
  return value ? format_number(*value) : std::string("NA");
}

}  // namespace eyecorp::tsv

namespace eyecorp {

bool natural_less(std::string_view a, std::string_view b) {
  auto is_digit = [](char c) { return c >= '0' && c <= '9'; };
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (is_digit(a[i]) && is_digit(b[j])) {
      std::size_t ie = i, je = j;
      while (ie < a.size() && is_digit(a[ie])) ++ie;
      while (je < b.size() && is_digit(b[je])) ++je;
      std::size_t is = i, js = j;
      while (is + 1 < ie && a[is] == '0') ++is;
      while (js + 1 < je && b[js] == '0') ++js;
      const std::size_t la = ie - is, lb = je - js;
      if (la != lb) return la < lb;
      const int cmp = a.substr(is, la).compare(b.substr(js, lb));
      if (cmp != 0) return cmp < 0;
      i = ie;
      j = je;
    } else {
      if (a[i] != b[j]) return static_cast<unsigned char>(a[i]) < static_cast<unsigned char>(b[j]);
      ++i;
      ++j;
    }
  }
  if ((a.size() - i) != (b.size() - j)) return (a.size() - i) < (b.size() - j);
  return a < b;
}

}  // namespace eyecorp
