#pragma once

#include <istream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sensordash::csv {

class ParseError : public std::runtime_error {
public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

struct Row {
  std::size_t line = 0;
  std::vector<std::string> fields;
};

/// Comma-separated rows with surrounding whitespace trimmed. Blank lines and
/// lines starting with '#' are skipped; double-quoted fields may contain commas.
/// A first row whose first field equals `header_first_field` is dropped.
[[nodiscard]] std::vector<Row> read(std::istream& in, std::string_view header_first_field = {});

[[nodiscard]] double to_double(const Row& row, std::size_t col);
[[nodiscard]] long long to_int(const Row& row, std::size_t col);
[[nodiscard]] bool to_bool(const Row& row, std::size_t col);
void expect_columns(const Row& row, std::size_t n);

}  // namespace sensordash::csv
