#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "critex/knowledge_base.hpp"
#include "critex/preprocessor.hpp"

namespace critex {

struct EntityMention {
  std::string trial_id;
  BlockKind block_kind = BlockKind::inclusion;
  std::size_t line_index = 0;  // trial-global index of the criteria line
  std::size_t first_token = 0;  // inclusive token span
  std::size_t last_token = 0;
  std::string surface;
  EntityCategory category = EntityCategory::treatment;
  double score = 1.0;

  std::size_t length() const { return last_token - first_token + 1; }
  bool overlaps(const EntityMention& o) const { return first_token <= o.last_token && o.first_token <= last_token; }
  bool operator==(const EntityMention&) const = default;
};

// Raw line text covered by an inclusive token span.
std::string span_surface(std::string_view line, const std::vector<Token>& tokens, std::size_t first, std::size_t last);

// Greedy longest-then-leftmost dictionary tagger over concept names.
class Gazetteer {
 public:
  explicit Gazetteer(const KnowledgeBase& kb);

  // Mentions on one line; trial/block/line fields are filled from the args.
  std::vector<EntityMention> tag(std::string_view line, const std::vector<Token>& tokens,
                                 std::string_view trial_id = {}, BlockKind block = BlockKind::inclusion,
                                 std::size_t line_index = 0) const;

 private:
  // token norms joined by ' ' -> category of the lowest matching concept id
  std::map<std::string, EntityCategory, std::less<>> names_;
  std::size_t max_tokens_ = 0;
};

std::vector<EntityMention> tag_gazetteer(const std::vector<Token>& line_tokens, const KnowledgeBase& kb);

// ---- BIO tag sequences

struct TagSpan {
  std::size_t first = 0;
  std::size_t last = 0;
  EntityCategory category = EntityCategory::treatment;
  bool operator==(const TagSpan&) const = default;
};

// Validates label syntax (O, B-<category>, I-<category>); throws LoadError.
void check_tag(std::string_view tag);
// True when no I- label follows O or a different category.
bool is_valid_bio(const std::vector<std::string>& tags);
// Decodes spans; a stray I- opens a new span as if it were B-.
std::vector<TagSpan> decode_bio(const std::vector<std::string>& tags);
std::vector<std::string> encode_bio(const std::vector<TagSpan>& spans, std::size_t length);

// Preprocessed trials keyed for tag ingestion: (nct_id, line_index) -> line.
struct CorpusLine {
  BlockKind block;
  const CriteriaLine* line;
};
using CorpusIndex = std::map<std::pair<std::string, std::size_t>, CorpusLine>;

// Reads tag interchange JSONL. Throws LoadError on malformed records,
// unknown lines, or token-count mismatches (naming trial and line).
std::vector<EntityMention> parse_external_tags(std::string_view jsonl, const CorpusIndex& corpus,
                                                std::string_view source = "<tags>");
std::vector<EntityMention> ingest_external_tags(const std::filesystem::path& tag_file, const CorpusIndex& corpus);

// Union of two mention lists for one line with overlaps resolved by score,
// then span length, then leftmost start. Result is ordered by token position.
std::vector<EntityMention> merge_mentions(const std::vector<EntityMention>& a, const std::vector<EntityMention>& b);

}  // namespace critex
