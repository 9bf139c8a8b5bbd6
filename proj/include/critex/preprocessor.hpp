#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace critex {

inline constexpr std::string_view kNumberMask = "<nummask>";
inline constexpr std::string_view kPunctMask = "<puncmask>";

struct Token {
  std::string surface;  // raw text, original case
  std::size_t start = 0;  // byte offsets into the source line
  std::size_t end = 0;
  std::string delex;  // lowercased, digits/punctuation masked

  // Lowercased surface; the view CFG lexing and gazetteer matching use.
  std::string norm() const;
  bool is_number() const { return delex == kNumberMask; }
  bool is_punct() const { return delex == kPunctMask; }

  bool operator==(const Token&) const = default;
};

enum class BlockKind { inclusion, exclusion };

std::string_view to_string(BlockKind k);
// Throws LoadError for anything but "inclusion"/"exclusion".
BlockKind parse_block_kind(std::string_view s);

struct CriteriaLine {
  std::string text;
  std::vector<Token> tokens;
};

struct CriteriaBlock {
  BlockKind kind = BlockKind::inclusion;
  std::vector<CriteriaLine> lines;
};

// Masked form of a single token surface. Idempotent.
std::string delexicalize(std::string_view surface);

std::vector<Token> tokenize(std::string_view line);

// Splits eligibility text into inclusion/exclusion blocks on heading lines.
// Lines before any heading belong to an inclusion block; bullets are stripped.
std::vector<CriteriaBlock> segment_blocks(std::string_view eligibility_text);

// Lines in block order with a trial-global running index.
struct IndexedLine {
  BlockKind block;
  std::size_t line_index;
  const CriteriaLine* line;
};
std::vector<IndexedLine> index_lines(const std::vector<CriteriaBlock>& blocks);

}  // namespace critex
