#include "rsa/csv.hpp"

#include "rsa/errors.hpp"
#include "rsa/util.hpp"

namespace rsa::csv {

std::vector<Row> parse(std::string_view content, const std::string& origin) {
  std::vector<Row> rows;
  size_t line = 1;
  size_t i = 0;
  const size_t n = content.size();

  while (i < n) {
    Row row;
    row.line = line;
    bool row_done = false;
    while (!row_done) {
      std::string field;
      if (i < n && content[i] == '"') {
        ++i;
        bool closed = false;
        while (i < n) {
          char c = content[i];
          if (c == '"') {
            if (i + 1 < n && content[i + 1] == '"') {
              field.push_back('"');
              i += 2;
            } else {
              ++i;
              closed = true;
              break;
            }
          } else {
            if (c == '\n') ++line;
            field.push_back(c);
            ++i;
          }
        }
        if (!closed) fail(Errc::parse_error, origin + ":" + std::to_string(row.line) + ": unterminated quoted field");
        if (i < n && content[i] != ',' && content[i] != '\n' && content[i] != '\r')
          fail(Errc::parse_error, origin + ":" + std::to_string(line) + ": garbage after closing quote");
      } else {
        while (i < n && content[i] != ',' && content[i] != '\n' && content[i] != '\r') {
          if (content[i] == '"')
            fail(Errc::parse_error, origin + ":" + std::to_string(line) + ": bare quote inside unquoted field");
          field.push_back(content[i]);
          ++i;
        }
      }
      row.fields.push_back(std::move(field));

      if (i >= n) {
        row_done = true;
      } else if (content[i] == ',') {
        ++i;
      } else {  // \r or \n
        if (content[i] == '\r') ++i;
        if (i < n && content[i] == '\n') ++i;
        ++line;
        row_done = true;
      }
    }
    // Skip rows that are entirely empty (e.g. trailing newline).
    if (row.fields.size() == 1 && row.fields[0].empty()) continue;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<Row> parse_file(const std::string& path) {
  return parse(read_file(path), path);
}

std::string escape_field(std::string_view field) {
  bool needs_quote = field.find_first_of(",\"\n\r") != std::string_view::npos;
  if (!needs_quote) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string join_row(const std::vector<std::string>& fields) {
  std::string out;
  for (size_t i = 0; i < fields.size(); ++i) {
    if (i) out.push_back(',');
    out += escape_field(fields[i]);
  }
  out.push_back('\n');
  return out;
}

}  // namespace rsa::csv
