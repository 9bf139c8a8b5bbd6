#include "critex/preprocessor.hpp"

#include <array>
#include <optional>
#include <regex>

#include "critex/error.hpp"
#include "critex/text.hpp"

namespace critex {

namespace {

bool ascii_digit(char c) { return c >= '0' && c <= '9'; }
bool ascii_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v'; }

enum class CharClass { space, digit, letter, punct };

CharClass classify(std::string_view line, std::size_t pos, std::size_t len) {
  const char c = line[pos];
  if (len == 1) {
    if (ascii_space(c)) return CharClass::space;
    if (ascii_digit(c)) return CharClass::digit;
    const auto u = static_cast<unsigned char>(c);
    if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z')) return CharClass::letter;
    if (u < 0x80) return CharClass::punct;
    return CharClass::letter;  // stray byte
  }
  const auto cp = text::decode_utf8(line.substr(pos, len)).front();
  if (cp == 0xA0 || cp == 0x2009 || cp == 0x202F) return CharClass::space;
  return text::is_punctuation(cp) ? CharClass::punct : CharClass::letter;
}

bool is_number_surface(std::string_view s) {
  if (s.empty() || !ascii_digit(s.front()) || !ascii_digit(s.back())) return false;
  bool dot = false;
  for (char c : s) {
    if (c == '.') {
      if (dot) return false;
      dot = true;
    } else if (!ascii_digit(c)) {
      return false;
    }
  }
  return true;
}

bool is_punct_surface(std::string_view s) {
  if (s.empty()) return false;
  for (std::size_t i = 0; i < s.size();) {
    const auto len = text::utf8_length(s, i);
    if (classify(s, i, len) != CharClass::punct) return false;
    i += len;
  }
  return true;
}

struct Heading {
  std::string_view phrase;
  BlockKind kind;
};

constexpr std::array<Heading, 9> kHeadings{{
    {"key inclusion criteria", BlockKind::inclusion},
    {"key exclusion criteria", BlockKind::exclusion},
    {"inclusion criteria", BlockKind::inclusion},
    {"exclusion criteria", BlockKind::exclusion},
    {"eligibility criteria", BlockKind::inclusion},
    {"inclusion", BlockKind::inclusion},
    {"exclusion", BlockKind::exclusion},
    {"key inclusion", BlockKind::inclusion},
    {"key exclusion", BlockKind::exclusion},
}};

struct HeadingMatch {
  BlockKind kind;
  std::string remainder;  // inline criterion text after "Heading:"
};

std::optional<HeadingMatch> match_heading(std::string_view line) {
  const auto norm = text::normalize_name(line);
  for (const auto& h : kHeadings)
    if (norm == h.phrase) return HeadingMatch{h.kind, {}};
  // "Inclusion Criteria: text" carries a criterion on the heading line.
  const auto lowered = text::to_lower(text::trim(line));
  const auto colon = lowered.find(':');
  if (colon == std::string::npos) return std::nullopt;
  const auto head = text::normalize_name(std::string_view(lowered).substr(0, colon));
  for (const auto& h : kHeadings)
    if (head == h.phrase) {
      auto rest = text::trim(text::trim(line).substr(colon + 1));
      return HeadingMatch{h.kind, std::string(rest)};
    }
  return std::nullopt;
}

// Splits "… years. Exclusion: leukemia." before each heading that follows a
// sentence break.
std::vector<std::string> split_inline_headings(const std::string& line) {
  static const std::regex heading(R"([.;]\s+((?:key\s+)?(?:inclusion|exclusion|eligibility)(?:\s+criteria)?\s*:))",
                                  std::regex::icase);
  std::vector<std::string> out;
  std::size_t from = 0;
  for (auto it = std::sregex_iterator(line.begin(), line.end(), heading); it != std::sregex_iterator(); ++it) {
    const auto cut = static_cast<std::size_t>(it->position(1));
    out.push_back(line.substr(from, cut - from));
    from = cut;
  }
  out.push_back(line.substr(from));
  return out;
}

std::string strip_bullet(std::string_view line) {
  static const std::regex bullet(R"(^\s*(?:[-*+]|\(?\d{1,3}[.)]|\(?[ivx]{1,4}[.)]|\(?[a-h][.)])\s+)");
  std::string s(text::trim(line));
  std::smatch m;
  // Multi-byte bullets cannot sit in a std::regex character class.
  for (std::string_view b : {"•", "·", "▪", "◦"}) {
    if (s.rfind(b, 0) == 0) {
      s = std::string(text::trim(std::string_view(s).substr(b.size())));
      return s;
    }
  }
  if (std::regex_search(s, m, bullet)) s = s.substr(m.length(0));
  return std::string(text::trim(s));
}

}  // namespace

std::string Token::norm() const { return text::to_lower(surface); }

std::string_view to_string(BlockKind k) { return k == BlockKind::inclusion ? "inclusion" : "exclusion"; }

BlockKind parse_block_kind(std::string_view s) {
  if (s == "inclusion") return BlockKind::inclusion;
  if (s == "exclusion") return BlockKind::exclusion;
  throw LoadError("unknown block kind '" + std::string(s) + "'");
}

std::string delexicalize(std::string_view surface) {
  if (is_number_surface(surface)) return std::string(kNumberMask);
  if (is_punct_surface(surface)) return std::string(kPunctMask);
  return text::to_lower(surface);
}

std::vector<Token> tokenize(std::string_view line) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  const auto emit = [&](std::size_t start, std::size_t end) {
    Token t;
    t.surface = std::string(line.substr(start, end - start));
    t.start = start;
    t.end = end;
    t.delex = delexicalize(t.surface);
    tokens.push_back(std::move(t));
  };
  while (i < line.size()) {
    const auto len = text::utf8_length(line, i);
    const auto cls = classify(line, i, len);
    const auto start = i;
    if (cls == CharClass::space) {
      i += len;
      continue;
    }
    if (cls == CharClass::punct) {
      i += len;
      emit(start, i);
      continue;
    }
    if (cls == CharClass::digit) {
      // Digit run with at most one interior decimal point.
      while (i < line.size() && ascii_digit(line[i])) ++i;
      if (i + 1 < line.size() && line[i] == '.' && ascii_digit(line[i + 1])) {
        ++i;
        while (i < line.size() && ascii_digit(line[i])) ++i;
      }
      emit(start, i);
      continue;
    }
    // Letter-initial word: letters and digits.
    i += len;
    while (i < line.size()) {
      const auto l = text::utf8_length(line, i);
      const auto c = classify(line, i, l);
      if (c != CharClass::letter && c != CharClass::digit) break;
      i += l;
    }
    emit(start, i);
  }
  return tokens;
}

std::vector<CriteriaBlock> segment_blocks(std::string_view eligibility_text) {
  std::vector<CriteriaBlock> blocks;
  const auto add_line = [&](std::string_view raw) {
    auto stripped = strip_bullet(raw);
    if (stripped.empty()) return;
    if (blocks.empty()) blocks.push_back(CriteriaBlock{BlockKind::inclusion, {}});
    auto tokens = tokenize(stripped);
    blocks.back().lines.push_back(CriteriaLine{std::move(stripped), std::move(tokens)});
  };
  for (const auto& physical : text::split(eligibility_text, '\n')) {
    for (const auto& raw : split_inline_headings(physical)) {
      if (auto heading = match_heading(raw)) {
        blocks.push_back(CriteriaBlock{heading->kind, {}});
        if (!heading->remainder.empty()) add_line(heading->remainder);
        continue;
      }
      add_line(raw);
    }
  }
  // Headings with nothing under them leave empty blocks.
  std::erase_if(blocks, [](const CriteriaBlock& b) { return b.lines.empty(); });
  if (blocks.empty()) blocks.push_back(CriteriaBlock{BlockKind::inclusion, {}});
  return blocks;
}

std::vector<IndexedLine> index_lines(const std::vector<CriteriaBlock>& blocks) {
  std::vector<IndexedLine> out;
  std::size_t index = 0;
  for (const auto& b : blocks)
    for (const auto& l : b.lines) out.push_back({b.kind, index++, &l});
  return out;
}

}  // namespace critex
