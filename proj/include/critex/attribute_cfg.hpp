#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "critex/error.hpp"
#include "critex/knowledge_base.hpp"
#include "critex/preprocessor.hpp"

namespace critex::cfg {

enum class LexKind { attribute, unit, comparison, number, negation, connector, end_of_string, unknown };
inline constexpr std::size_t kLexKindCount = 8;

std::string_view to_string(LexKind k);
std::optional<LexKind> parse_lex_kind(std::string_view s);

enum class CmpOp { lt, le, gt, ge, eq, between };

std::string_view to_string(CmpOp op);

struct LexToken {
  LexKind kind = LexKind::unknown;
  std::string surface;
  // Inclusive range of line tokens this lexeme covers (end_of_string: empty,
  // first_token == line size).
  std::size_t first_token = 0;
  std::size_t last_token = 0;

  std::optional<double> value;             // number
  std::optional<std::string> attribute_id;  // attribute
  std::optional<std::string> unit_symbol;   // unit
  std::optional<CmpOp> op;                  // comparison
  // Comparison phrases that trail their number ("18 or older").
  bool postfix = false;

  bool operator==(const LexToken&) const = default;
};

// Surface-form tables the lexer matches against. Built from the attribute
// catalog of a knowledge base plus fixed comparison/negation/connector lists.
class Lexicon {
 public:
  explicit Lexicon(const KnowledgeBase& kb);

  std::vector<LexToken> lex(const std::vector<Token>& line_tokens) const;

 private:
  struct Entry {
    LexKind kind;
    std::optional<std::string> attribute_id;
    std::optional<std::string> unit_symbol;
    std::optional<CmpOp> op;
    bool postfix = false;
    bool filler = false;
  };
  // Keys are token norms joined by a single space.
  std::map<std::string, Entry, std::less<>> phrases_;
  // Keys are token norms concatenated without separators.
  std::map<std::string, std::string, std::less<>> units_;
  std::size_t max_phrase_tokens_ = 1;
  std::size_t max_unit_tokens_ = 1;
};

std::vector<LexToken> lex(const std::vector<Token>& line_tokens, const Lexicon& lexicon);

// Context-free grammar in CYK-ready form: every production is binary
// (A -> B C over nonterminals) or preterminal (A -> lex kind).
class Grammar {
 public:
  struct Production {
    int lhs = 0;
    int left = -1;   // binary children; -1 for preterminals
    int right = -1;
    std::optional<LexKind> terminal;
    bool preterminal() const { return terminal.has_value(); }
  };

  static constexpr std::string_view kStartSymbol = "CRITERION";

  // Parses the production-rule format; throws LoadError on malformed lines,
  // unknown terminal kinds, or a start symbol that derives nothing.
  static Grammar parse(std::string_view source_text, std::string_view source_name = "<grammar>");
  static Grammar load(const std::filesystem::path& path);

  const std::vector<Production>& productions() const { return productions_; }
  const std::vector<std::string>& symbols() const { return symbols_; }
  int start() const { return start_; }
  const std::string& name(int symbol) const { return symbols_.at(static_cast<std::size_t>(symbol)); }
  // Terminal kinds that occur in some preterminal production.
  std::vector<LexKind> terminal_kinds() const;

 private:
  std::vector<Production> productions_;
  std::vector<std::string> symbols_;
  int start_ = -1;
};

struct ParseTree {
  int symbol = 0;
  int production = 0;
  std::size_t begin = 0;  // half-open span over lex tokens
  std::size_t end = 0;
  std::vector<ParseTree> children;

  bool operator==(const ParseTree&) const = default;
};

// Canonical ordering: span start, span length, then production indices and
// split points in preorder.
bool tree_less(const ParseTree& a, const ParseTree& b);

// Modified CYK: every tree rooted at the start symbol over every contiguous
// subspan, in canonical order.
std::vector<ParseTree> parse_cyk(const std::vector<LexToken>& tokens, const Grammar& grammar);
// Same, over bare kinds (used for grammar-level checks).
std::vector<ParseTree> parse_cyk(const std::vector<LexKind>& kinds, const Grammar& grammar);

// Drops structural duplicates and trees whose span lies strictly inside
// another tree's span. Output is in canonical order.
std::vector<ParseTree> prune(std::vector<ParseTree> trees);

struct Bound {
  double value = 0;
  bool inclusive = true;
  bool operator==(const Bound&) const = default;
};

// A numeric constraint in the attribute's canonical unit. When `negated` is
// set both bounds are present and the constraint holds outside [lower, upper].
struct AttributeCriterion {
  std::string attribute_id;
  std::optional<Bound> lower;
  std::optional<Bound> upper;
  std::string unit;
  bool negated = false;

  bool satisfied_by(double value) const;
  bool operator==(const AttributeCriterion&) const = default;
};

// Complement of a criterion: one-sided bounds flip direction and
// inclusiveness, two-sided intervals toggle `negated`. An involution.
AttributeCriterion complement(const AttributeCriterion& c);

// Bound inversion after normalization; carries the offending criterion.
struct ContradictionError : EvaluationError {
  ContradictionError(const std::string& what, AttributeCriterion c) : EvaluationError(what), criterion(std::move(c)) {}
  AttributeCriterion criterion;
};

double to_canonical(double value, std::string_view unit, const AttributeDef& def);
double from_canonical(double value, std::string_view unit, const AttributeDef& def);

// Interprets one tree; returns an empty list when the tree's leaves do not
// form a recognized constraint shape. Throws ContradictionError on inverted
// bounds and EvaluationError on units the attribute does not accept.
std::vector<AttributeCriterion> evaluate(const ParseTree& tree, const std::vector<LexToken>& tokens,
                                         const KnowledgeBase& kb);

struct ExtractedCriterion {
  AttributeCriterion criterion;
  std::size_t first_token = 0;  // line-token span of the source clause
  std::size_t last_token = 0;
};

struct LineExtraction {
  std::vector<ExtractedCriterion> criteria;
  std::vector<ContradictionError> contradictions;
  std::vector<std::string> warnings;
};

// lex -> parse_cyk -> prune -> evaluate for one tokenized line.
LineExtraction extract_attributes(const std::vector<Token>& line_tokens, const Lexicon& lexicon,
                                  const Grammar& grammar, const KnowledgeBase& kb);

}  // namespace critex::cfg
