#include "roadsafe/csv.hpp"

#include <charconv>
#include <istream>
#include <ostream>

namespace roadsafe {

int CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  return -1;
}

namespace {

// Parses one logical record (quotes may span physical lines). Returns false
// on clean EOF before any input.
bool read_record(std::istream& in, std::vector<std::string>& fields,
                 int& line) {
  fields.clear();
  int c = in.get();
  if (c == EOF) return false;

  std::string field;
  bool in_quotes = false;
  bool any = false;
  while (true) {
    if (c == EOF) {
      if (in_quotes) throw CsvError("unterminated quoted field", line);
      break;
    }
    const char ch = static_cast<char>(c);
    if (in_quotes) {
      if (ch == '"') {
        if (in.peek() == '"') {
          field.push_back('"');
          in.get();
        } else {
          in_quotes = false;
        }
      } else {
        if (ch == '\n') ++line;
        field.push_back(ch);
      }
    } else if (ch == '"' && field.empty()) {
      in_quotes = true;
      any = true;
    } else if (ch == ',') {
      fields.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (ch == '\n') {
      ++line;
      break;
    } else if (ch == '\r') {
      // swallow; newline handled next iteration
    } else {
      field.push_back(ch);
    }
    c = in.get();
  }
  fields.push_back(std::move(field));
  (void)any;
  return true;
}

}  // namespace

CsvTable read_csv(std::istream& in) {
  CsvTable table;
  int line = 1;
  if (!read_record(in, table.header, line)) {
    throw CsvError("empty CSV input", 1);
  }
  std::vector<std::string> fields;
  int row_line = line;
  while (read_record(in, fields, line)) {
    if (!(fields.size() == 1 && fields[0].empty())) {  // skip blank lines
      if (fields.size() != table.header.size()) {
        throw CsvError("row has " + std::to_string(fields.size()) +
                           " fields, header has " +
                           std::to_string(table.header.size()),
                       row_line);
      }
      table.rows.push_back(fields);
    }
    row_line = line;
  }
  return table;
}

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    const std::string& f = fields[i];
    if (f.find_first_of(",\"\n") != std::string::npos) {
      out << '"';
      for (char ch : f) {
        if (ch == '"') out << '"';
        out << ch;
      }
      out << '"';
    } else {
      out << f;
    }
  }
  out << '\n';
}

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

}  // namespace roadsafe
