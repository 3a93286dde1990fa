#include <sstream>

#include "doctest.h"
#include "roadsafe/csv.hpp"

using namespace roadsafe;

TEST_CASE("csv reads header and rows") {
  std::stringstream in("a,b,c\n1,2,3\n4,,6\n");
  const CsvTable t = read_csv(in);
  CHECK(t.header == std::vector<std::string>{"a", "b", "c"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[1][1] == "");
  CHECK(t.column("b") == 1);
  CHECK(t.column("zzz") == -1);
}

TEST_CASE("csv handles quotes, escapes and CRLF") {
  std::stringstream in("a,b\r\n\"x,y\",\"he said \"\"hi\"\"\"\r\n");
  const CsvTable t = read_csv(in);
  REQUIRE(t.rows.size() == 1);
  CHECK(t.rows[0][0] == "x,y");
  CHECK(t.rows[0][1] == "he said \"hi\"");
}

TEST_CASE("csv rejects ragged rows with a line number") {
  std::stringstream in("a,b\n1,2\n1,2,3\n");
  try {
    read_csv(in);
    FAIL("expected CsvError");
  } catch (const CsvError& e) {
    CHECK(e.line() == 3);
  }
}

TEST_CASE("write_csv_row quotes only when needed") {
  std::ostringstream out;
  write_csv_row(out, {"plain", "with,comma", "with\"quote"});
  CHECK(out.str() == "plain,\"with,comma\",\"with\"\"quote\"\n");
}

TEST_CASE("format_double round-trips") {
  for (double v : {0.1, 1.0, -3.25, 1e-17, 123456789.123456,
                   0.30000000000000004}) {
    CHECK(std::stod(format_double(v)) == v);
  }
  CHECK(format_double(1.0) == "1");
}
