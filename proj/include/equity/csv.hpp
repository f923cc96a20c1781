#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace equity::csv {

struct Row {
  std::size_t line = 0;  // 1-based line number in the source file
  std::vector<std::string> fields;
};

// Comma-separated text with a header line. Quoted fields ("a,b", "say ""hi""")
// are supported; a UTF-8 BOM and CRLF line endings are stripped.
class Table {
 public:
  static Table read(const std::filesystem::path& path);
  static Table parse(std::string_view text);

  const std::vector<std::string>& header() const { return header_; }
  const std::vector<Row>& rows() const { return rows_; }
  bool empty_file() const { return empty_file_; }

  std::optional<std::size_t> column(std::string_view name) const;
  std::size_t require_column(std::string_view name, const std::string& file) const;

 private:
  std::vector<std::string> header_;
  std::vector<Row> rows_;
  std::unordered_map<std::string, std::size_t> index_;
  bool empty_file_ = true;
};

std::vector<std::string> split_line(std::string_view line);

std::string escape(std::string_view field);
std::string join(const std::vector<std::string>& fields);

std::optional<double> parse_double(std::string_view text);
std::optional<long long> parse_int(std::string_view text);

}  // namespace equity::csv

namespace equity {

// Six significant digits, the fixed precision of every report.
std::string format_number(double value);

// Writes to a sibling temporary and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace equity
