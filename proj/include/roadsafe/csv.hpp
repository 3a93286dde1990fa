#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace roadsafe {

class CsvError : public std::runtime_error {
 public:
  CsvError(const std::string& what, int line)
      : std::runtime_error(what + " (line " + std::to_string(line) + ")"),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(std::string_view name) const;  // -1 when absent
};

// Minimal RFC 4180 reader: quoted fields, doubled quotes, CRLF tolerated.
// Every row must match the header width.
CsvTable read_csv(std::istream& in);

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

// Shortest round-trip decimal form (std::to_chars).
std::string format_double(double v);

}  // namespace roadsafe
