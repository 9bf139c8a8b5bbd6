#include "critex/relation_extractor.hpp"

#include <map>
#include <tuple>

#include "critex/error.hpp"
#include "critex/text.hpp"

namespace critex {

std::string_view to_string(Polarity p) { return p == Polarity::affirmed ? "affirmed" : "negated"; }

Polarity parse_polarity(std::string_view s) {
  if (s == "affirmed") return Polarity::affirmed;
  if (s == "negated") return Polarity::negated;
  throw LoadError("unknown polarity '" + std::string(s) + "'");
}

std::vector<NegationRule> parse_negation_rules(std::string_view tsv, std::string_view source) {
  using Key = std::tuple<std::string, std::size_t, Direction>;
  std::map<Key, NegationRule> grouped;
  std::vector<Key> order;
  std::size_t number = 0;
  for (auto& raw : text::split(tsv, '\n')) {
    ++number;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    auto t = text::trim(raw);
    if (t.empty() || t.front() == '#') continue;
    const auto where = std::string(source) + ":" + std::to_string(number);
    auto fields = text::split(raw, '\t');
    if (fields.size() != 4) throw LoadError(where + ": expected 4 tab-separated fields");
    const auto cat = std::string(text::trim(fields[0]));
    std::optional<EntityCategory> category;
    if (cat != "*") {
      try {
        category = parse_category(cat);
      } catch (const LoadError& e) {
        throw LoadError(where + ": " + e.what());
      }
    }
    // Keywords are compared token by token against line norms.
    std::string keyword;
    for (const auto& tok : tokenize(fields[1])) keyword += (keyword.empty() ? "" : " ") + tok.norm();
    if (keyword.empty()) throw LoadError(where + ": empty keyword");
    auto dist = text::parse_double(fields[2]);
    if (!dist || *dist < 0 || *dist != static_cast<double>(static_cast<std::size_t>(*dist)))
      throw LoadError(where + ": max_token_distance must be a non-negative integer");
    const auto dir_s = text::to_lower(text::trim(fields[3]));
    Direction dir;
    if (dir_s == "preceding") dir = Direction::preceding;
    else if (dir_s == "either") dir = Direction::either;
    else throw LoadError(where + ": direction must be 'preceding' or 'either'");

    Key key{cat, static_cast<std::size_t>(*dist), dir};
    auto [it, inserted] = grouped.try_emplace(key);
    if (inserted) {
      order.push_back(key);
      it->second.category = category;
      it->second.max_token_distance = static_cast<std::size_t>(*dist);
      it->second.direction = dir;
    }
    it->second.keywords.insert(keyword);
  }
  std::vector<NegationRule> out;
  for (const auto& k : order) out.push_back(grouped.at(k));
  return out;
}

std::vector<NegationRule> load_negation_rules(const std::filesystem::path& path) {
  return parse_negation_rules(read_file(path), path.string());
}

Polarity detect_negation(const std::vector<Token>& line_tokens, const EntityMention& mention,
                         const std::vector<NegationRule>& rules) {
  std::vector<std::string> norms;
  norms.reserve(line_tokens.size());
  for (const auto& t : line_tokens) norms.push_back(t.norm());

  for (const auto& rule : rules) {
    if (!rule.applies_to(mention.category)) continue;
    for (const auto& keyword : rule.keywords) {
      const auto parts = text::split(keyword, ' ');
      if (parts.size() > norms.size()) continue;
      for (std::size_t a = 0; a + parts.size() <= norms.size(); ++a) {
        bool match = true;
        for (std::size_t k = 0; k < parts.size() && match; ++k) match = norms[a + k] == parts[k];
        if (!match) continue;
        const auto b = a + parts.size() - 1;  // inclusive keyword end
        if (b < mention.first_token && mention.first_token - b - 1 <= rule.max_token_distance) return Polarity::negated;
        if (rule.direction == Direction::either && a > mention.last_token &&
            a - mention.last_token - 1 <= rule.max_token_distance)
          return Polarity::negated;
      }
    }
  }
  return Polarity::affirmed;
}

}  // namespace critex
