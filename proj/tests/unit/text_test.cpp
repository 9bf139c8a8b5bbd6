#include "doctest.h"

#include "critex/text.hpp"

using namespace critex::text;

TEST_CASE("lowercase and trim") {
  CHECK(to_lower("HbA1c") == "hba1c");
  CHECK(trim("  a b \t") == "a b");
  CHECK(trim("") == "");
}

TEST_CASE("split keeps empty fields") {
  CHECK(split("a\t\tb", '\t') == std::vector<std::string>{"a", "", "b"});
  CHECK(split("", ',') == std::vector<std::string>{""});
  CHECK(join({"x", "y"}, ", ") == "x, y");
}

TEST_CASE("normalize_name") {
  CHECK(normalize_name("  Kidney   FAILURE. ") == "kidney failure");
  CHECK(normalize_name("(leukemia)") == "leukemia");
  CHECK(normalize_name("crohn's disease") == "crohn's disease");
  CHECK(normalize_name("") == "");
}

TEST_CASE("utf8 helpers") {
  CHECK(decode_utf8("≥a").size() == 2);
  CHECK(utf8_length("≥", 0) == 3);
  CHECK(is_punctuation(U'≥'));
  CHECK(is_punctuation(U'-'));
  CHECK_FALSE(is_punctuation(U'é'));
}

TEST_CASE("number parsing and formatting") {
  CHECK(parse_double("18") == 18.0);
  CHECK(parse_double("+2.5") == 2.5);
  CHECK_FALSE(parse_double("2.5x").has_value());
  CHECK_FALSE(parse_double("").has_value());
  CHECK(format_double(0.1) == "0.1");
  CHECK(snap(216.0 / 12.0) == 18.0);
  CHECK(snap(0.1 + 0.2) == 0.3);
}
