#include <random>

#include "doctest.h"

#include "critex/error.hpp"
#include "critex/knowledge_base.hpp"
#include "support.hpp"

using namespace critex;
using namespace critex::testing;

namespace {

const char* kFixtureConcepts =
    "# id\tname\tsynonyms\tcategory\tparent\n"
    "D009369\tneoplasms\tcancer\tcancer\t\n"
    "D007938\tleukemia\tleukaemia\tcancer\tD009369\n";

const char* kFixtureAttributes = "bmi\tbmi\tbody mass index\tnumeric\tkg/m2\tkg/m²=1\n";

KnowledgeBase fixture_kb() {
  return KnowledgeBase(parse_concepts(kFixtureConcepts), parse_attributes(kFixtureAttributes));
}

}  // namespace

TEST_CASE("concept row parses with synonym and parent") {
  const auto concepts = parse_concepts(kFixtureConcepts);
  REQUIRE(concepts.size() == 2);
  const auto& c = concepts[1];
  CHECK(c.id == "D007938");
  CHECK(c.preferred_name == "leukemia");
  CHECK(c.synonyms == std::set<std::string>{"leukaemia"});
  CHECK(c.category == EntityCategory::cancer);
  CHECK(c.parent_id == "D009369");
}

TEST_CASE("empty files give an empty knowledge base") {
  KnowledgeBase kb(parse_concepts(""), parse_attributes(""));
  CHECK(kb.concepts().empty());
  CHECK(kb.attributes().empty());
}

TEST_CASE("canonical unit gets factor 1") {
  auto kb = fixture_kb();
  const auto* bmi = kb.find_attribute("bmi");
  REQUIRE(bmi);
  CHECK(bmi->accepted_units.at("kg/m2") == 1.0);
  CHECK(bmi->accepted_units.at("kg/m²") == 1.0);
  CHECK_THROWS_AS(KnowledgeBase({}, parse_attributes("x\tx\t\tnumeric\tkg\tkg=2\n")), LoadError);
  CHECK_THROWS_AS(parse_attributes("x\tx\t\tnumeric\tkg\tg=-1\n"), LoadError);
}

TEST_CASE("fractional unit factors") {
  auto attrs = parse_attributes("age\tage\t\tnumeric\tyears\tmonths=1/12\n");
  CHECK(attrs[0].accepted_units.at("months") == doctest::Approx(1.0 / 12));
}

TEST_CASE("lookup_exact is case-insensitive") {
  auto kb = fixture_kb();
  CHECK(kb.lookup_exact("leukaemia") == std::set<std::string>{"D007938"});
  CHECK(kb.lookup_exact("LEUKEMIA") == std::set<std::string>{"D007938"});
  CHECK(kb.lookup_exact("").empty());
  CHECK(kb.lookup_exact("Body Mass Index") == std::set<std::string>{"bmi"});
}

TEST_CASE("is_ancestor") {
  const auto& kb = bundled().kb;
  CHECK(kb.is_ancestor("D006505", "D006509"));
  CHECK_FALSE(kb.is_ancestor("D006509", "D006505"));
  CHECK_FALSE(kb.is_ancestor("D006505", "D006505"));
  CHECK_THROWS_AS(kb.is_ancestor("nope", "D006505"), LookupError);

  KnowledgeBase chain({make_concept("a", "a", EntityCategory::cancer),
                       make_concept("b", "b", EntityCategory::cancer, "a"),
                       make_concept("c", "c", EntityCategory::cancer, "b")},
                      {});
  CHECK(chain.is_ancestor("a", "c"));
}

TEST_CASE("validation errors name the problem") {
  using C = EntityCategory;
  CHECK_THROWS_AS(KnowledgeBase({make_concept("a", "a", C::cancer), make_concept("a", "b", C::cancer)}, {}), LoadError);
  CHECK_THROWS_AS(KnowledgeBase({make_concept("a", "a", C::cancer, "zz")}, {}), LoadError);
  CHECK_THROWS_AS(KnowledgeBase({make_concept("a", "a", C::cancer), make_concept("b", "b", C::allergy, "a")}, {}),
                  LoadError);
  try {
    KnowledgeBase({make_concept("a", "a", C::cancer, "b"), make_concept("b", "b", C::cancer, "a")}, {});
    FAIL("cycle not detected");
  } catch (const LoadError& e) {
    CHECK(std::string(e.what()).find("cycle") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_concepts("a\ta\t\tnot_a_category\t\n"), LoadError);
  CHECK_THROWS_AS(parse_concepts("a\ta\tcancer\n"), LoadError);
}

TEST_CASE("bundled vocabulary covers every category") {
  const auto& kb = bundled().kb;
  std::set<EntityCategory> seen;
  for (const auto& [id, c] : kb.concepts()) seen.insert(c.category);
  CHECK(seen.size() == kEntityCategoryCount);
  CHECK(kb.concepts().size() >= 200);
  CHECK(kb.attributes().size() >= 71);
  CHECK(kb.find_concept("D007938")->synonyms.count("leukaemia"));
}

TEST_CASE("write/parse round trip") {
  const auto& kb = bundled().kb;
  KnowledgeBase again(parse_concepts(write_concepts(kb)), parse_attributes(write_attributes(kb)));
  CHECK(again == kb);
}

TEST_CASE("random forests form a strict partial order") {
  std::mt19937 rng(7);
  for (int round = 0; round < 50; ++round) {
    const int n = 1 + static_cast<int>(rng() % 25);
    std::vector<Concept> concepts;
    std::vector<int> parent(n, -1);
    for (int i = 0; i < n; ++i) {
      if (i > 0 && rng() % 3) parent[i] = static_cast<int>(rng() % i);
      concepts.push_back(make_concept("c" + std::to_string(i), "name " + std::to_string(i), EntityCategory::treatment,
                                      parent[i] < 0 ? std::nullopt : std::optional("c" + std::to_string(parent[i]))));
    }
    KnowledgeBase kb(concepts, {});
    const auto brute = [&](int a, int d) {
      for (int p = parent[d]; p >= 0; p = parent[p])
        if (p == a) return true;
      return false;
    };
    for (int a = 0; a < n; ++a)
      for (int d = 0; d < n; ++d) {
        const auto as = "c" + std::to_string(a), ds = "c" + std::to_string(d);
        CHECK(kb.is_ancestor(as, ds) == brute(a, d));
        if (kb.is_ancestor(as, ds)) CHECK_FALSE(kb.is_ancestor(ds, as));
      }
  }
}
