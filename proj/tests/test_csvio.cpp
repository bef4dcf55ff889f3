#include <doctest.h>

#include <cmath>
#include <string>

#include "qdplan/csvio.hpp"

using namespace qdplan;

TEST_SUITE_BEGIN("csvio");

TEST_CASE("fmt_g17 round-trips doubles exactly") {
  for (double v : {0.0, -0.0, 1.0, -1.5, 0.1, 1.0 / 3.0, 3.14159265358979323846, 1e-300, 1e300,
                   -24.234999999999999, 5.0000000000000001}) {
    CHECK(parse_double(fmt_g17(v)) == v);
  }
  // round-trip survives a second pass
  std::string s = fmt_g17(2.0 / 3.0);
  CHECK(fmt_g17(parse_double(s)) == s);
}

TEST_CASE("parse_double rejects junk") {
  CHECK(parse_double("2.5e-3") == 0.0025);
  CHECK_THROWS(parse_double(""));
  CHECK_THROWS(parse_double("abc"));
  CHECK_THROWS(parse_double("1.5x"));
  CHECK_THROWS(parse_double("1.5 2.5"));
}

TEST_CASE("parse_int is strict") {
  CHECK(parse_int("-42") == -42);
  CHECK(parse_int("9007199254740993") == 9007199254740993LL);
  CHECK_THROWS(parse_int(""));
  CHECK_THROWS(parse_int("12.5"));
  CHECK_THROWS(parse_int("7seven"));
}

TEST_CASE("split_csv_line") {
  auto f = split_csv_line("a,b,,d");
  REQUIRE(f.size() == 4);
  CHECK(f[0] == "a");
  CHECK(f[2] == "");
  CHECK(f[3] == "d");
  CHECK(split_csv_line("").size() == 1);
  CHECK(split_csv_line("x").size() == 1);
  CHECK(split_csv_line(",").size() == 2);
}

TEST_SUITE_END();
