#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace rsa::csv {

struct Row {
  std::vector<std::string> fields;
  size_t line;  // 1-based line where the row starts
};

/// RFC-4180-style parse: quoted fields may contain commas, doubled quotes
/// and newlines. Throws ParseError with the offending line number.
std::vector<Row> parse(std::string_view content, const std::string& origin);

std::vector<Row> parse_file(const std::string& path);

std::string escape_field(std::string_view field);
std::string join_row(const std::vector<std::string>& fields);

}  // namespace rsa::csv
