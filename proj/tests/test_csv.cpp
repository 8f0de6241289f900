#include "doctest.h"
#include "holdout/csv.hpp"
#include "holdout/error.hpp"

using holdout::csv::parse;

TEST_CASE("quoted fields keep commas, quotes and newlines") {
  const auto rows = parse("a,b\n\"x,1\",\"say \"\"hi\"\"\"\n\"multi\nline\",z\n");
  REQUIRE(rows.size() == 3);
  CHECK(rows[1] == holdout::csv::Row{"x,1", "say \"hi\""});
  CHECK(rows[2] == holdout::csv::Row{"multi\nline", "z"});
}

TEST_CASE("CRLF and a missing final newline parse the same as LF") {
  CHECK(parse("a,b\r\n1,2\r\n") == parse("a,b\n1,2"));
}

TEST_CASE("empty cells survive") {
  const auto rows = parse("a,,c\n,,\n");
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == holdout::csv::Row{"a", "", "c"});
  CHECK(rows[1] == holdout::csv::Row{"", "", ""});
}

TEST_CASE("unterminated quote is an error") {
  CHECK_THROWS_AS(parse("a\n\"open"), holdout::Error);
}

TEST_CASE("quote only when needed, and parse inverts join") {
  CHECK(holdout::csv::quote("plain") == "plain");
  CHECK(holdout::csv::quote("a,b") == "\"a,b\"");
  CHECK(holdout::csv::quote("q\"") == "\"q\"\"\"");
  const holdout::csv::Row row{"x", "a,b", "\"q\"", "line\nbreak", ""};
  const auto back = parse(holdout::csv::join(row) + "\n");
  REQUIRE(back.size() == 1);
  CHECK(back[0] == row);
}
