#include "carshare/io.hpp"

#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <memory>
#include <ostream>
#include <sstream>

#include "carshare/error.hpp"

namespace carshare::io {

std::string format_double(double v) {
  if (v == 0.0) return "0";  // folds -0
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

std::string format_fixed(double v, int decimals) {
  std::array<char, 64> buf{};
  if (std::abs(v) < 0.5 * std::pow(10.0, -decimals)) v = 0.0;
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::fixed,
                           decimals);
  return std::string(buf.data(), res.ptr);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r'))
    s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' ||
                        s.back() == '\n'))
    s.remove_suffix(1);
  return s;
}

std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<long long> parse_int(std::string_view s) {
  s = trim(s);
  long long v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<bool> parse_bool(std::string_view s) {
  s = trim(s);
  if (s == "1" || s == "true" || s == "TRUE" || s == "yes" || s == "y") return true;
  if (s == "0" || s == "false" || s == "FALSE" || s == "no" || s == "n") return false;
  return std::nullopt;
}

std::vector<std::string> split(std::string_view line, char delimiter) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"' && field.empty()) {
      quoted = true;
    } else if (c == delimiter) {
      out.emplace_back(trim(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  out.emplace_back(trim(field));
  return out;
}

std::optional<std::size_t> Table::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  return std::nullopt;
}

std::size_t Table::require_column(std::string_view name) const {
  auto c = column(name);
  if (!c) throw UserError("missing column '" + std::string(name) + "'");
  return *c;
}

Table read_table(std::istream& in) {
  Table t;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF &&
        static_cast<unsigned char>(line[1]) == 0xBB && static_cast<unsigned char>(line[2]) == 0xBF)
      line.erase(0, 3);
    if (trim(line).empty()) continue;
    if (!have_header) {
      t.delimiter = line.find(';') != std::string::npos ? ';' : ',';
      t.header = split(line, t.delimiter);
      have_header = true;
      continue;
    }
    t.rows.push_back(split(line, t.delimiter));
    t.line_numbers.push_back(line_no);
  }
  if (!have_header) throw UserError("delimited text input has no header row");
  return t;
}

Table read_table_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UserError("cannot open " + path.string());
  return read_table(in);
}

TableWriter::TableWriter(std::ostream& out, std::vector<std::string> header, char delimiter)
    : out_(out), columns_(header.size()), delimiter_(delimiter) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out_ << delimiter_;
    out_ << header[i];
  }
  out_ << '\n';
}

TableWriter& TableWriter::cell(std::string_view s) {
  if (written_++) out_ << delimiter_;
  out_ << s;
  return *this;
}

TableWriter& TableWriter::cell(double v) { return cell(std::string_view(format_double(v))); }

TableWriter& TableWriter::cell(long long v) { return cell(std::string_view(std::to_string(v))); }

void TableWriter::end_row() {
  if (written_ != columns_)
    throw std::logic_error("table row has " + std::to_string(written_) + " cells, expected " +
                           std::to_string(columns_));
  out_ << '\n';
  written_ = 0;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UserError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw UserError("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

std::string sha256_hex(std::string_view data) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest.data(), &len) != 1)
    throw std::runtime_error("sha256 digest failed");
  std::ostringstream ss;
  for (unsigned int i = 0; i < len; ++i)
    ss << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  return ss.str();
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(read_file(path)); }

}  // namespace carshare::io
