#include "sensordash/csv.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>

namespace sensordash::csv {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& line, std::size_t line_no) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(trim(field));
      field.clear();
    } else {
      field += c;
    }
  }
  if (quoted) throw ParseError(line_no, "unterminated quote");
  out.push_back(trim(field));
  return out;
}

}  // namespace

std::vector<Row> read(std::istream& in, std::string_view header_first_field) {
  std::vector<Row> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto fields = split(line, line_no);
    if (rows.empty() && !header_first_field.empty() && !fields.empty() &&
        fields.front() == header_first_field) {
      header_first_field = {};
      continue;
    }
    header_first_field = {};
    rows.push_back({line_no, std::move(fields)});
  }
  return rows;
}

void expect_columns(const Row& row, std::size_t n) {
  if (row.fields.size() != n) {
    throw ParseError(row.line, "expected " + std::to_string(n) + " columns, got " +
                                   std::to_string(row.fields.size()));
  }
}

double to_double(const Row& row, std::size_t col) {
  const auto& f = row.fields.at(col);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
  if (f.empty() || ec != std::errc{} || ptr != f.data() + f.size() || !std::isfinite(v)) {
    throw ParseError(row.line, "column " + std::to_string(col + 1) + " is not a number: '" + f + "'");
  }
  return v;
}

long long to_int(const Row& row, std::size_t col) {
  const auto& f = row.fields.at(col);
  long long v = 0;
  auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
  if (f.empty() || ec != std::errc{} || ptr != f.data() + f.size()) {
    throw ParseError(row.line, "column " + std::to_string(col + 1) + " is not an integer: '" + f + "'");
  }
  return v;
}

bool to_bool(const Row& row, std::size_t col) {
  auto f = row.fields.at(col);
  std::transform(f.begin(), f.end(), f.begin(), [](unsigned char c) { return std::tolower(c); });
  if (f == "1" || f == "true" || f == "yes" || f == "y") return true;
  if (f == "0" || f == "false" || f == "no" || f == "n") return false;
  throw ParseError(row.line, "column " + std::to_string(col + 1) + " is not a boolean: '" + f + "'");
}

}  // namespace sensordash::csv
