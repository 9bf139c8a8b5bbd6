#include "critex/entity_tagger.hpp"

#include <algorithm>

#include "json.hpp"

#include "critex/error.hpp"
#include "critex/text.hpp"

namespace critex {

namespace {

std::string norm_key(const std::vector<Token>& tokens, std::size_t first, std::size_t end) {
  std::string key;
  for (auto k = first; k < end; ++k) {
    if (k > first) key += ' ';
    key += tokens[k].norm();
  }
  return key;
}

}  // namespace

std::string span_surface(std::string_view line, const std::vector<Token>& tokens, std::size_t first, std::size_t last) {
  if (tokens.empty() || first > last || last >= tokens.size()) return {};
  return std::string(line.substr(tokens[first].start, tokens[last].end - tokens[first].start));
}

Gazetteer::Gazetteer(const KnowledgeBase& kb) {
  for (const auto& [id, c] : kb.concepts()) {
    std::vector<std::string> names{c.preferred_name};
    names.insert(names.end(), c.synonyms.begin(), c.synonyms.end());
    for (const auto& name : names) {
      auto tokens = tokenize(name);
      if (tokens.empty()) continue;
      max_tokens_ = std::max(max_tokens_, tokens.size());
      // Concepts iterate in id order, so the first claim on a name is stable.
      names_.emplace(norm_key(tokens, 0, tokens.size()), c.category);
    }
  }
}

std::vector<EntityMention> Gazetteer::tag(std::string_view line, const std::vector<Token>& tokens,
                                          std::string_view trial_id, BlockKind block, std::size_t line_index) const {
  std::vector<EntityMention> out;
  const auto n = tokens.size();
  std::size_t i = 0;
  while (i < n) {
    bool matched = false;
    for (auto len = std::min(max_tokens_, n - i); len >= 1; --len) {
      auto it = names_.find(norm_key(tokens, i, i + len));
      if (it == names_.end()) continue;
      EntityMention m;
      m.trial_id = std::string(trial_id);
      m.block_kind = block;
      m.line_index = line_index;
      m.first_token = i;
      m.last_token = i + len - 1;
      m.surface = span_surface(line, tokens, m.first_token, m.last_token);
      m.category = it->second;
      m.score = 1.0;
      out.push_back(std::move(m));
      i += len;
      matched = true;
      break;
    }
    if (!matched) ++i;
  }
  return out;
}

std::vector<EntityMention> tag_gazetteer(const std::vector<Token>& line_tokens, const KnowledgeBase& kb) {
  // Reconstruct a line with the original gaps so surfaces are exact.
  std::string line;
  for (const auto& t : line_tokens) {
    if (line.size() < t.start) line.append(t.start - line.size(), ' ');
    line += t.surface;
  }
  return Gazetteer(kb).tag(line, line_tokens);
}

// ---- BIO

namespace {

struct ParsedTag {
  char prefix;  // 'O', 'B', 'I'
  EntityCategory category = EntityCategory::treatment;
};

ParsedTag parse_tag(std::string_view tag) {
  if (tag == "O") return {'O'};
  if (tag.size() > 2 && (tag[0] == 'B' || tag[0] == 'I') && tag[1] == '-') {
    try {
      return {tag[0], parse_category(tag.substr(2))};
    } catch (const LoadError&) {
    }
  }
  throw LoadError("invalid BIO tag '" + std::string(tag) + "'");
}

}  // namespace

void check_tag(std::string_view tag) { parse_tag(tag); }

bool is_valid_bio(const std::vector<std::string>& tags) {
  std::optional<EntityCategory> open;
  for (const auto& t : tags) {
    const auto p = parse_tag(t);
    if (p.prefix == 'I' && open != p.category) return false;
    open = p.prefix == 'O' ? std::nullopt : std::optional<EntityCategory>(p.category);
  }
  return true;
}

std::vector<TagSpan> decode_bio(const std::vector<std::string>& tags) {
  std::vector<TagSpan> spans;
  std::optional<EntityCategory> open;
  for (std::size_t k = 0; k < tags.size(); ++k) {
    const auto p = parse_tag(tags[k]);
    if (p.prefix == 'O') {
      open.reset();
      continue;
    }
    if (p.prefix == 'I' && open == p.category) {
      spans.back().last = k;
      continue;
    }
    spans.push_back(TagSpan{k, k, p.category});
    open = p.category;
  }
  return spans;
}

std::vector<std::string> encode_bio(const std::vector<TagSpan>& spans, std::size_t length) {
  std::vector<std::string> tags(length, "O");
  for (const auto& s : spans) {
    const auto cat = std::string(to_string(s.category));
    for (auto k = s.first; k <= s.last && k < length; ++k) tags[k] = (k == s.first ? "B-" : "I-") + cat;
  }
  return tags;
}

std::vector<EntityMention> parse_external_tags(std::string_view jsonl, const CorpusIndex& corpus, std::string_view source) {
  std::vector<EntityMention> out;
  std::size_t number = 0;
  for (const auto& raw : text::split(jsonl, '\n')) {
    ++number;
    if (text::trim(raw).empty()) continue;
    const auto where = std::string(source) + ":" + std::to_string(number);
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(raw);
    } catch (const nlohmann::json::exception& e) {
      throw LoadError(where + ": " + e.what());
    }
    std::string nct_id;
    std::size_t line_index = 0;
    std::vector<std::string> tokens, tags;
    std::vector<double> scores;
    BlockKind block = BlockKind::inclusion;
    try {
      nct_id = rec.at("nct_id").get<std::string>();
      line_index = rec.at("line_index").get<std::size_t>();
      tokens = rec.at("tokens").get<std::vector<std::string>>();
      tags = rec.at("tags").get<std::vector<std::string>>();
      if (rec.contains("scores") && !rec["scores"].is_null()) scores = rec["scores"].get<std::vector<double>>();
      block = parse_block_kind(rec.at("block").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      throw LoadError(where + ": " + e.what());
    }
    const auto label = "trial " + nct_id + " line " + std::to_string(line_index);
    if (tokens.size() != tags.size()) throw LoadError(where + ": " + label + ": tokens and tags differ in length");
    if (!scores.empty() && scores.size() != tags.size())
      throw LoadError(where + ": " + label + ": scores and tags differ in length");
    auto it = corpus.find({nct_id, line_index});
    if (it == corpus.end()) throw LoadError(where + ": " + label + " not present in the corpus");
    const auto& line = *it->second.line;
    if (line.tokens.size() != tokens.size())
      throw LoadError(where + ": " + label + ": token count " + std::to_string(tokens.size()) +
                      " does not match corpus token count " + std::to_string(line.tokens.size()));
    if (it->second.block != block) throw LoadError(where + ": " + label + ": block does not match corpus");

    for (const auto& span : decode_bio(tags)) {
      EntityMention m;
      m.trial_id = nct_id;
      m.block_kind = block;
      m.line_index = line_index;
      m.first_token = span.first;
      m.last_token = span.last;
      m.surface = span_surface(line.text, line.tokens, span.first, span.last);
      m.category = span.category;
      if (!scores.empty()) {
        double lowest = 1.0;
        for (auto k = span.first; k <= span.last; ++k) lowest = std::min(lowest, scores[k]);
        m.score = std::clamp(lowest, 0.0, 1.0);
      }
      out.push_back(std::move(m));
    }
  }
  return out;
}

std::vector<EntityMention> ingest_external_tags(const std::filesystem::path& tag_file, const CorpusIndex& corpus) {
  return parse_external_tags(read_file(tag_file), corpus, tag_file.string());
}

std::vector<EntityMention> merge_mentions(const std::vector<EntityMention>& a, const std::vector<EntityMention>& b) {
  std::vector<EntityMention> pool(a);
  pool.insert(pool.end(), b.begin(), b.end());
  std::stable_sort(pool.begin(), pool.end(), [](const EntityMention& x, const EntityMention& y) {
    if (x.score != y.score) return x.score > y.score;
    if (x.length() != y.length()) return x.length() > y.length();
    return x.first_token < y.first_token;
  });
  std::vector<EntityMention> kept;
  for (auto& m : pool)
    if (std::none_of(kept.begin(), kept.end(), [&](const EntityMention& k) { return k.overlaps(m); })) kept.push_back(m);
  std::sort(kept.begin(), kept.end(),
            [](const EntityMention& x, const EntityMention& y) { return x.first_token < y.first_token; });
  return kept;
}

}  // namespace critex
