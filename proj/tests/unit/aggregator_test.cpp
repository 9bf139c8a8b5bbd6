#include <random>

#include "doctest.h"

#include "critex/aggregator.hpp"
#include "critex/error.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace critex;
using namespace critex::testing;

namespace {

Provenance prov(std::size_t line) {
  Provenance p;
  p.line_index = line;
  return p;
}

CriterionFact entity(std::string concept_id, bool presence, BlockKind form = BlockKind::inclusion, std::size_t line = 0) {
  return CriterionFact{"NCT00000001", concept_id, EntityConstraint{presence}, form, {prov(line)}};
}

CriterionFact attr(std::string id, std::optional<cfg::Bound> lo, std::optional<cfg::Bound> hi,
                   BlockKind form = BlockKind::inclusion, std::string unit = "years") {
  return CriterionFact{"NCT00000001", id, cfg::AttributeCriterion{id, lo, hi, unit, false}, form, {prov(0)}};
}

bool has(const std::vector<CriterionFact>& facts, std::string_view id) {
  return std::any_of(facts.begin(), facts.end(), [&](const CriterionFact& f) { return f.concept_ref == id; });
}

const KnowledgeBase& kb() { return bundled().kb; }
const std::vector<IntentRule>& intents() { return bundled().intents; }

}  // namespace

TEST_CASE("cast_exclusion") {
  auto f = cast_exclusion(entity("D007938", true, BlockKind::exclusion));
  CHECK(f.form == BlockKind::inclusion);
  CHECK_FALSE(f.entity().requires_presence);

  auto a = cast_exclusion(attr("age", cfg::Bound{65, false}, std::nullopt, BlockKind::exclusion));
  CHECK(a.attribute().upper == cfg::Bound{65, true});
  CHECK_FALSE(a.attribute().lower);

  auto range = attr("age", cfg::Bound{18, true}, cfg::Bound{65, true}, BlockKind::exclusion);
  CHECK(cast_exclusion(range).attribute().negated);
  CHECK(cast_exclusion(cast_exclusion(range)) == range);
}

TEST_CASE("deduplicate merges provenance") {
  std::vector<DroppedFact> audit;
  auto facts = deduplicate({entity("D006509", true, BlockKind::exclusion, 1), entity("D006509", true, BlockKind::exclusion, 4)}, &audit);
  REQUIRE(facts.size() == 1);
  CHECK(facts[0].provenance.size() == 2);
  REQUIRE(audit.size() == 1);
  CHECK(audit[0].reason == DropReason::duplicate);
  CHECK(deduplicate({}).empty());
  auto different = deduplicate({attr("age", cfg::Bound{18, true}, std::nullopt), attr("age", cfg::Bound{21, true}, std::nullopt)});
  CHECK(different.size() == 2);
}

TEST_CASE("generalized facts are dropped") {
  std::vector<DroppedFact> audit;
  auto r = drop_generalized({entity("D006505", true, BlockKind::exclusion), entity("D006509", true, BlockKind::exclusion)}, kb(), &audit);
  CHECK_FALSE(has(r, "D006505"));
  CHECK(has(r, "D006509"));
  REQUIRE(audit.size() == 1);
  CHECK(audit[0].reason == DropReason::generalized);

  CHECK(drop_generalized({entity("D006509", true, BlockKind::exclusion)}, kb()).size() == 1);
  auto mixed = drop_generalized({entity("D006505", true, BlockKind::exclusion), entity("D006509", false, BlockKind::exclusion)}, kb());
  CHECK(mixed.size() == 2);
}

TEST_CASE("contradictions and intent conflicts") {
  auto r = remove_contradictions({entity("D011247", true), entity("D003267", true)}, intents());
  CHECK(has(r.retained, "D011247"));
  CHECK_FALSE(has(r.retained, "D003267"));
  REQUIRE(r.dropped.size() == 1);
  CHECK(r.dropped[0].reason == DropReason::intent_conflict);

  r = remove_contradictions({attr("age", cfg::Bound{18, true}, std::nullopt), attr("age", std::nullopt, cfg::Bound{18, false})}, intents());
  CHECK(r.retained.empty());
  CHECK(r.dropped.size() == 2);

  r = remove_contradictions({entity("D007938", true), entity("D007938", false)}, intents());
  CHECK(r.retained.empty());

  const std::vector<CriterionFact> calm{entity("D007938", false), attr("age", cfg::Bound{18, true}, std::nullopt)};
  CHECK(remove_contradictions(calm, intents()).retained == calm);
}

TEST_CASE("aggregate intersects inclusion and cast exclusion bounds") {
  auto p = aggregate({attr("age", cfg::Bound{18, true}, std::nullopt), attr("age", cfg::Bound{65, false}, std::nullopt, BlockKind::exclusion)},
                     kb(), intents());
  REQUIRE(p.facts.size() == 1);
  CHECK(p.facts[0].attribute().lower == cfg::Bound{18, true});
  CHECK(p.facts[0].attribute().upper == cfg::Bound{65, true});
  CHECK(aggregate({}, kb(), intents()).facts.empty());

  auto simple = aggregate({entity("D001249", true), entity("D007938", true, BlockKind::exclusion),
                           attr("bmi", std::nullopt, cfg::Bound{38, true}, BlockKind::inclusion, "kg/m2")},
                          kb(), intents());
  CHECK(simple.facts.size() == 3);
  for (const auto& f : simple.facts) CHECK(f.form == BlockKind::inclusion);
}

TEST_CASE("hepatitis and pregnancy fixtures through aggregate") {
  auto hep = aggregate({entity("D006505", true, BlockKind::exclusion), entity("D006509", true, BlockKind::exclusion)}, kb(), intents());
  CHECK(has(hep.facts, "D006509"));
  CHECK_FALSE(has(hep.facts, "D006505"));
  auto preg = aggregate({entity("D011247", true), entity("D003267", true)}, kb(), intents());
  CHECK(has(preg.facts, "D011247"));
  CHECK_FALSE(has(preg.facts, "D003267"));
}

TEST_CASE("patient evaluation") {
  auto p = aggregate({attr("age", cfg::Bound{18, true}, cfg::Bound{65, true}), entity("D007938", false)}, kb(), intents());
  auto r = evaluate_patient(p, {{"age", "40"}, {"D007938", "absent"}}, kb());
  CHECK(r.overall == Verdict::satisfied);
  r = evaluate_patient(p, {{"age", "70"}, {"D007938", "absent"}}, kb());
  CHECK(r.overall == Verdict::violated);
  CHECK(std::any_of(r.facts.begin(), r.facts.end(), [&](const FactVerdict& v) {
    return v.verdict == Verdict::violated && p.facts[v.fact_index].concept_ref == "age";
  }));
  r = evaluate_patient(p, {{"age", "480 months"}, {"D007938", "absent"}}, kb());
  CHECK(r.overall == Verdict::satisfied);
  r = evaluate_patient(p, {{"age", "40"}}, kb());
  CHECK(r.overall == Verdict::indeterminate);
  r = evaluate_patient(p, {{"age", "70"}}, kb());
  CHECK(r.overall == Verdict::violated);
  CHECK(evaluate_patient(EligibilityProfile{}, {}, kb()).overall == Verdict::satisfied);
  CHECK_THROWS_AS(evaluate_patient(p, {{"age", "old"}, {"D007938", "absent"}}, kb()), EvaluationError);
  CHECK_THROWS_AS(evaluate_patient(p, {{"age", "40"}, {"D007938", "maybe"}}, kb()), EvaluationError);
  CHECK_THROWS_AS(evaluate_patient(p, {{"age", "40 parsecs"}, {"D007938", "absent"}}, kb()), EvaluationError);
}

TEST_CASE("aggregate is idempotent on random fact sets") {
  std::mt19937 rng(17);
  const std::vector<std::string> ids{"D007938", "D006505", "D006509", "D011247", "D003267", "D001249"};
  for (int round = 0; round < 300; ++round) {
    std::vector<CriterionFact> facts;
    for (int k = 0, n = static_cast<int>(rng() % 8); k < n; ++k) {
      const auto form = rng() % 2 ? BlockKind::inclusion : BlockKind::exclusion;
      if (rng() % 2) {
        facts.push_back(entity(ids[rng() % ids.size()], rng() % 2, form));
      } else {
        const double a = 10 + rng() % 60;
        switch (rng() % 3) {
          case 0: facts.push_back(attr("age", cfg::Bound{a, rng() % 2 == 0}, std::nullopt, form)); break;
          case 1: facts.push_back(attr("age", std::nullopt, cfg::Bound{a, rng() % 2 == 0}, form)); break;
          default: facts.push_back(attr("age", cfg::Bound{a, true}, cfg::Bound{a + rng() % 20, true}, form));
        }
      }
    }
    const auto once = aggregate(facts, kb(), intents());
    const auto twice = aggregate(once.facts, kb(), intents());
    CHECK(twice.facts == once.facts);
    CHECK(twice.dropped.empty());
    for (const auto& f : facts) CHECK(cast_exclusion(cast_exclusion(f)) == f);
  }
}

TEST_CASE("intent rule files") {
  auto rules = parse_intent_rules("# w\tl\nA\tB\tnote\nC\tD\n");
  REQUIRE(rules.size() == 2);
  CHECK(rules[0].winner == "A");
  CHECK(rules[1].note.empty());
  CHECK_THROWS_AS(parse_intent_rules("A\n"), LoadError);
}
