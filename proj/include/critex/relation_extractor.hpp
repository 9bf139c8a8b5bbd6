#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "critex/entity_tagger.hpp"

namespace critex {

enum class Polarity { affirmed, negated };

std::string_view to_string(Polarity p);
Polarity parse_polarity(std::string_view s);

enum class Direction { preceding, either };

struct NegationRule {
  std::optional<EntityCategory> category;  // nullopt: applies to every category
  std::set<std::string> keywords;           // normalized phrases
  std::size_t max_token_distance = 0;
  Direction direction = Direction::preceding;

  bool applies_to(EntityCategory c) const { return !category || *category == c; }
};

// Rules TSV: category_or_*<TAB>keyword<TAB>max_token_distance<TAB>direction.
// Rows sharing (category, distance, direction) fold into one rule.
std::vector<NegationRule> parse_negation_rules(std::string_view tsv, std::string_view source = "<rules>");
std::vector<NegationRule> load_negation_rules(const std::filesystem::path& path);

// Negated iff some applicable keyword sits within the rule's distance of the
// mention: tokens strictly between keyword end and mention start (preceding),
// or between mention end and keyword start (following, for `either`).
Polarity detect_negation(const std::vector<Token>& line_tokens, const EntityMention& mention,
                         const std::vector<NegationRule>& rules);

}  // namespace critex
