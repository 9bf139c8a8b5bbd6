#include <random>

#include "doctest.h"

#include "critex/entity_tagger.hpp"
#include "critex/error.hpp"
#include "support.hpp"

using namespace critex;
using namespace critex::testing;

namespace {

KnowledgeBase small_kb() {
  return KnowledgeBase({make_concept("D009369", "neoplasms", EntityCategory::cancer),
                        make_concept("D007938", "leukemia", EntityCategory::cancer, "D009369", {"leukaemia"}),
                        make_concept("D051437", "kidney failure", EntityCategory::chronic_disease),
                        make_concept("kidney", "kidney", EntityCategory::chronic_disease)},
                       {});
}

EntityMention mention(std::size_t first, std::size_t last, double score, EntityCategory cat = EntityCategory::cancer) {
  EntityMention m;
  m.first_token = first;
  m.last_token = last;
  m.score = score;
  m.category = cat;
  return m;
}

}  // namespace

TEST_CASE("gazetteer prefers the longest match") {
  const auto kb = small_kb();
  const auto toks = tokenize("history of kidney failure");
  const auto ms = tag_gazetteer(toks, kb);
  REQUIRE(ms.size() == 1);
  CHECK(ms[0].first_token == 2);
  CHECK(ms[0].last_token == 3);
  CHECK(ms[0].surface == "kidney failure");
  CHECK(ms[0].category == EntityCategory::chronic_disease);
  CHECK(tag_gazetteer({}, kb).empty());
}

TEST_CASE("gazetteer finds repeated mentions") {
  const auto kb = small_kb();
  const auto ms = tag_gazetteer(tokenize("leukemia and Leukaemia"), kb);
  REQUIRE(ms.size() == 2);
  CHECK(ms[0].last_token < ms[1].first_token);
  CHECK(ms[1].surface == "Leukaemia");
}

TEST_CASE("gazetteer carries trial and line fields") {
  const auto kb = small_kb();
  Gazetteer g(kb);
  const std::string line = "no leukemia";
  const auto ms = g.tag(line, tokenize(line), "NCT00000001", BlockKind::exclusion, 4);
  REQUIRE(ms.size() == 1);
  CHECK(ms[0].trial_id == "NCT00000001");
  CHECK(ms[0].block_kind == BlockKind::exclusion);
  CHECK(ms[0].line_index == 4);
  CHECK(ms[0].score == 1.0);
}

TEST_CASE("BIO decoding") {
  auto spans = decode_bio({"B-cancer", "I-cancer", "O"});
  REQUIRE(spans.size() == 1);
  CHECK(spans[0] == TagSpan{0, 1, EntityCategory::cancer});
  CHECK(decode_bio({"O", "O"}).empty());
  auto repaired = decode_bio({"O", "I-treatment"});
  REQUIRE(repaired.size() == 1);
  CHECK(repaired[0] == TagSpan{1, 1, EntityCategory::treatment});
  CHECK_FALSE(is_valid_bio({"O", "I-treatment"}));
  CHECK(is_valid_bio({"B-allergy", "I-allergy", "B-allergy"}));
  CHECK_FALSE(is_valid_bio({"B-allergy", "I-cancer"}));
  CHECK_THROWS_AS(check_tag("B-nonsense"), LoadError);
  CHECK_THROWS_AS(check_tag("X"), LoadError);
}

TEST_CASE("BIO encode/decode round trip") {
  std::mt19937 rng(11);
  const auto& cats = all_categories();
  for (int round = 0; round < 300; ++round) {
    const std::size_t n = rng() % 15;
    std::vector<TagSpan> spans;
    std::size_t i = 0;
    while (i < n) {
      if (rng() % 2) {
        const std::size_t len = 1 + rng() % 3;
        const auto last = std::min(n - 1, i + len - 1);
        spans.push_back({i, last, cats[rng() % cats.size()]});
        i = last + 1;
      } else {
        ++i;
      }
    }
    const auto tags = encode_bio(spans, n);
    CHECK(tags.size() == n);
    CHECK(is_valid_bio(tags));
    CHECK(decode_bio(tags) == spans);
  }
}

TEST_CASE("merge resolves overlaps by score then length") {
  const auto a = std::vector{mention(0, 0, 0.9)};
  const auto b = std::vector{mention(0, 0, 1.0)};
  auto m = merge_mentions(a, b);
  REQUIRE(m.size() == 1);
  CHECK(m[0].score == 1.0);

  auto nested = merge_mentions({mention(1, 1, 0.8)}, {mention(0, 2, 0.8)});
  REQUIRE(nested.size() == 1);
  CHECK(nested[0].first_token == 0);
  CHECK(nested[0].last_token == 2);

  auto disjoint = merge_mentions({mention(4, 5, 1.0)}, {mention(0, 1, 0.5)});
  REQUIRE(disjoint.size() == 2);
  CHECK(disjoint[0].first_token == 0);
  CHECK(disjoint[1].first_token == 4);
}

TEST_CASE("merge is idempotent and overlap-free") {
  std::mt19937 rng(5);
  for (int round = 0; round < 300; ++round) {
    std::vector<EntityMention> a, b;
    for (int k = 0; k < 6; ++k) {
      const std::size_t s = rng() % 10;
      (rng() % 2 ? a : b).push_back(mention(s, s + rng() % 3, (rng() % 4) / 4.0 + 0.25));
    }
    const auto m = merge_mentions(a, b);
    for (std::size_t i = 0; i + 1 < m.size(); ++i) CHECK(m[i].last_token < m[i + 1].first_token);
    CHECK(merge_mentions(m, {}) == m);
    CHECK(merge_mentions(m, m) == m);
  }
}

namespace {

struct TagFixture {
  std::vector<CriteriaBlock> blocks = segment_blocks("Inclusion Criteria:\nacute leukemia patients\nExclusion Criteria:\nHIV");
  CorpusIndex index() const {
    CorpusIndex idx;
    for (const auto& l : index_lines(blocks)) idx[{"NCT00000001", l.line_index}] = CorpusLine{l.block, l.line};
    return idx;
  }
};

}  // namespace

TEST_CASE("external tags ingest into mentions") {
  TagFixture f;
  const auto jsonl =
      R"({"nct_id":"NCT00000001","line_index":0,"block":"inclusion","tokens":["acute","leukemia","patients"],"tags":["B-cancer","I-cancer","O"],"scores":[0.9,0.7,0.99]})"
      "\n";
  const auto ms = parse_external_tags(jsonl, f.index());
  REQUIRE(ms.size() == 1);
  CHECK(ms[0].surface == "acute leukemia");
  CHECK(ms[0].category == EntityCategory::cancer);
  CHECK(ms[0].score == doctest::Approx(0.7));
}

TEST_CASE("external tag errors name the record") {
  TagFixture f;
  const auto idx = f.index();
  const auto bad_len =
      R"({"nct_id":"NCT00000001","line_index":0,"block":"inclusion","tokens":["acute","leukemia","patients"],"tags":["O","O"]})";
  CHECK_THROWS_AS(parse_external_tags(bad_len, idx), LoadError);
  const auto bad_line =
      R"({"nct_id":"NCT00000001","line_index":9,"block":"inclusion","tokens":["x"],"tags":["O"]})";
  CHECK_THROWS_AS(parse_external_tags(bad_line, idx), LoadError);
  const auto bad_tokens = R"({"nct_id":"NCT00000001","line_index":1,"block":"exclusion","tokens":["a","b"],"tags":["O","O"]})";
  try {
    parse_external_tags(bad_tokens, idx);
    FAIL("expected an error");
  } catch (const LoadError& e) {
    CHECK(std::string(e.what()).find("NCT00000001") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_external_tags("{not json", idx), LoadError);
}
