#include "doctest.h"

#include "critex/error.hpp"
#include "critex/relation_extractor.hpp"
#include "support.hpp"

using namespace critex;
using namespace critex::testing;

namespace {

Polarity polarity_of(std::string_view line, std::string_view surface_word, EntityCategory cat,
                     const std::vector<NegationRule>& rules) {
  const auto toks = tokenize(line);
  EntityMention m;
  m.category = cat;
  for (std::size_t i = 0; i < toks.size(); ++i)
    if (toks[i].norm() == surface_word) m.first_token = m.last_token = i;
  return detect_negation(toks, m, rules);
}

}  // namespace

TEST_CASE("preceding keyword within distance negates") {
  const auto rules = parse_negation_rules("*\tno\t5\tpreceding\n*\twithout\t5\tpreceding\n*\tabsence of\t5\tpreceding\n");
  CHECK(polarity_of("no history of leukemia", "leukemia", EntityCategory::cancer, rules) == Polarity::negated);
  CHECK(polarity_of("leukemia", "leukemia", EntityCategory::cancer, rules) == Polarity::affirmed);
  CHECK(polarity_of("leukemia, no", "leukemia", EntityCategory::cancer, rules) == Polarity::affirmed);
  CHECK(polarity_of("in the absence of leukemia", "leukemia", EntityCategory::cancer, rules) == Polarity::negated);
  CHECK(polarity_of("no a b c d e f leukemia", "leukemia", EntityCategory::cancer, rules) == Polarity::affirmed);
  CHECK(polarity_of("no a b c d e leukemia", "leukemia", EntityCategory::cancer, rules) == Polarity::negated);
}

TEST_CASE("category rules with either direction") {
  const auto& rules = bundled().negation_rules;
  CHECK(polarity_of("hiv seronegative", "hiv", EntityCategory::chronic_disease, rules) == Polarity::negated);
  CHECK(polarity_of("leukemia seronegative", "leukemia", EntityCategory::cancer, rules) == Polarity::affirmed);
  CHECK(polarity_of("no known allergy", "allergy", EntityCategory::allergy, rules) == Polarity::negated);
  CHECK(polarity_of("denies asthma", "asthma", EntityCategory::chronic_disease, rules) == Polarity::negated);
}

TEST_CASE("adding keywords never un-negates") {
  const auto base = parse_negation_rules("*\tno\t3\tpreceding\n");
  const auto more = parse_negation_rules("*\tno\t3\tpreceding\n*\tfree of\t3\tpreceding\n*\tresolved\t3\teither\n");
  for (const auto* line : {"no leukemia", "free of leukemia", "leukemia resolved", "leukemia", "no x y z w leukemia"}) {
    if (polarity_of(line, "leukemia", EntityCategory::cancer, base) == Polarity::negated)
      CHECK(polarity_of(line, "leukemia", EntityCategory::cancer, more) == Polarity::negated);
  }
}

TEST_CASE("rule file errors") {
  CHECK_THROWS_AS(parse_negation_rules("*\tno\t3\n"), LoadError);
  CHECK_THROWS_AS(parse_negation_rules("*\tno\t-1\tpreceding\n"), LoadError);
  CHECK_THROWS_AS(parse_negation_rules("*\tno\t3\tsideways\n"), LoadError);
  CHECK_THROWS_AS(parse_negation_rules("martian\tno\t3\tpreceding\n"), LoadError);
  CHECK(parse_negation_rules("# only a comment\n").empty());
  CHECK(parse_polarity("negated") == Polarity::negated);
}
