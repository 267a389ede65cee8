#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace carshare::io {

// Shortest decimal text that round-trips to the same double.
std::string format_double(double v);

// Fixed number of decimals, for human-facing report tables.
std::string format_fixed(double v, int decimals);

std::optional<double> parse_double(std::string_view s);
std::optional<long long> parse_int(std::string_view s);
std::optional<bool> parse_bool(std::string_view s);

std::string_view trim(std::string_view s);
std::vector<std::string> split(std::string_view line, char delimiter);

// A delimited text table with a header row. The delimiter is detected from
// the header (';' wins over ',' when present).
struct Table {
  char delimiter = ',';
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;  // 1-based source line of each row

  std::optional<std::size_t> column(std::string_view name) const;
  std::size_t require_column(std::string_view name) const;
};

Table read_table(std::istream& in);
Table read_table_file(const std::filesystem::path& path);

class TableWriter {
 public:
  TableWriter(std::ostream& out, std::vector<std::string> header, char delimiter = ',');
  TableWriter& cell(std::string_view s);
  TableWriter& cell(double v);
  TableWriter& cell(long long v);
  TableWriter& cell(int v) { return cell(static_cast<long long>(v)); }
  TableWriter& cell(std::size_t v) { return cell(static_cast<long long>(v)); }
  void end_row();

 private:
  std::ostream& out_;
  std::size_t columns_;
  std::size_t written_ = 0;
  char delimiter_;
};

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

// Hex SHA-256 digest.
std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

}  // namespace carshare::io
