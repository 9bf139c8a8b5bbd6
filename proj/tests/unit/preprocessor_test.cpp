#include <random>

#include "doctest.h"

#include "critex/error.hpp"
#include "critex/preprocessor.hpp"

using namespace critex;

namespace {

std::vector<std::string> surfaces(const std::vector<Token>& t) {
  std::vector<std::string> out;
  for (const auto& x : t) out.push_back(x.surface);
  return out;
}

std::vector<std::string> delexes(const std::vector<Token>& t) {
  std::vector<std::string> out;
  for (const auto& x : t) out.push_back(x.delex);
  return out;
}

std::vector<std::string> texts(const CriteriaBlock& b) {
  std::vector<std::string> out;
  for (const auto& l : b.lines) out.push_back(l.text);
  return out;
}

}  // namespace

TEST_CASE("tokenize masks digits and punctuation") {
  const auto t = tokenize("BMI < 25 kg/m2");
  CHECK(surfaces(t) == std::vector<std::string>{"BMI", "<", "25", "kg", "/", "m2"});
  CHECK(delexes(t) == std::vector<std::string>{"bmi", "<puncmask>", "<nummask>", "kg", "<puncmask>", "m2"});
  CHECK(tokenize("").empty());
  const auto h = tokenize("Hgb");
  REQUIRE(h.size() == 1);
  CHECK(h[0].delex == "hgb");
}

TEST_CASE("tokenize handles decimals and glued units") {
  CHECK(surfaces(tokenize("1.5x ULN")) == std::vector<std::string>{"1.5", "x", "ULN"});
  CHECK(surfaces(tokenize("25kg")) == std::vector<std::string>{"25", "kg"});
  CHECK(surfaces(tokenize("age ≥18")) == std::vector<std::string>{"age", "≥", "18"});
  CHECK(surfaces(tokenize("end.")) == std::vector<std::string>{"end", "."});
}

TEST_CASE("token offsets reconstruct the line") {
  std::mt19937 rng(3);
  const std::vector<std::string> pieces{"age", " ", "≥", "18", ".", "kg/m²", "  ", "x", "(", "3.5", "é", "-", "\t"};
  for (int i = 0; i < 500; ++i) {
    std::string line;
    for (int k = 0, n = static_cast<int>(rng() % 12); k < n; ++k) line += pieces[rng() % pieces.size()];
    const auto toks = tokenize(line);
    std::string rebuilt;
    std::size_t pos = 0;
    for (const auto& t : toks) {
      CHECK(t.start >= pos);
      CHECK(line.substr(t.start, t.end - t.start) == t.surface);
      CHECK(std::string_view(line).substr(pos, t.start - pos).find_first_not_of(" \t") == std::string_view::npos);
      pos = t.end;
      CHECK(delexicalize(t.delex) == t.delex);
    }
  }
}

TEST_CASE("delexicalize is idempotent") {
  for (const auto* s : {"ECOG 0-1", "≤ 38 kg/m²", "", "<nummask>", "Hgb >= 9.0 g/dL"})
    CHECK(delexicalize(delexicalize(s)) == delexicalize(s));
}

TEST_CASE("segment_blocks splits on headings") {
  const auto blocks = segment_blocks("Inclusion Criteria:\n- age ≥ 18 years\nExclusion Criteria:\n- pregnancy");
  REQUIRE(blocks.size() == 2);
  CHECK(blocks[0].kind == BlockKind::inclusion);
  CHECK(texts(blocks[0]) == std::vector<std::string>{"age ≥ 18 years"});
  CHECK(blocks[1].kind == BlockKind::exclusion);
  CHECK(texts(blocks[1]) == std::vector<std::string>{"pregnancy"});
}

TEST_CASE("segment_blocks edge cases") {
  auto empty = segment_blocks("");
  REQUIRE(empty.size() == 1);
  CHECK(empty[0].kind == BlockKind::inclusion);
  CHECK(empty[0].lines.empty());

  auto plain = segment_blocks("adults\nsigned consent");
  REQUIRE(plain.size() == 1);
  CHECK(texts(plain[0]) == std::vector<std::string>{"adults", "signed consent"});

  auto bullets = segment_blocks("Key Exclusion Criteria:\n1. HIV\n  * Leukemia\n• Asthma\n(a) Stroke\n\n");
  REQUIRE(bullets.size() == 1);
  CHECK(bullets[0].kind == BlockKind::exclusion);
  CHECK(texts(bullets[0]) == std::vector<std::string>{"HIV", "Leukemia", "Asthma", "Stroke"});
}

TEST_CASE("inline headings keep their remainder") {
  auto blocks = segment_blocks("Inclusion: age ≥ 18 years. Exclusion: leukemia.");
  REQUIRE(blocks.size() == 2);
  CHECK(texts(blocks[0]) == std::vector<std::string>{"age ≥ 18 years."});
  CHECK(texts(blocks[1]) == std::vector<std::string>{"leukemia."});
}

TEST_CASE("index_lines numbers lines across blocks") {
  const auto blocks = segment_blocks("Inclusion Criteria:\na\nb\nExclusion Criteria:\nc");
  const auto lines = index_lines(blocks);
  REQUIRE(lines.size() == 3);
  CHECK(lines[2].line_index == 2);
  CHECK(lines[2].block == BlockKind::exclusion);
  CHECK(lines[2].line->text == "c");
}

TEST_CASE("block kind names") {
  CHECK(parse_block_kind("exclusion") == BlockKind::exclusion);
  CHECK_THROWS_AS(parse_block_kind("other"), LoadError);
}
