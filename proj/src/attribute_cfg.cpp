#include "critex/attribute_cfg.hpp"

#include <algorithm>
#include <array>
#include <sstream>

#include <spdlog/spdlog.h>

#include "critex/error.hpp"
#include "critex/text.hpp"

namespace critex::cfg {

namespace {

constexpr std::array<std::pair<LexKind, std::string_view>, kLexKindCount> kKindNames{{
    {LexKind::attribute, "attribute"},
    {LexKind::unit, "unit"},
    {LexKind::comparison, "comparison"},
    {LexKind::number, "number"},
    {LexKind::negation, "negation"},
    {LexKind::connector, "connector"},
    {LexKind::end_of_string, "end_of_string"},
    {LexKind::unknown, "unknown"},
}};

struct FixedPhrase {
  std::string_view text;
  LexKind kind;
  std::optional<CmpOp> op = std::nullopt;
  bool postfix = false;
  bool filler = false;
};

// Comparison phrases are matched on token norms, so "> =" and ">=" both
// appear. Longest match wins, which lets "no more than" beat "no".
const std::vector<FixedPhrase>& fixed_phrases() {
  using K = LexKind;
  static const std::vector<FixedPhrase> phrases = {
      {"≥", K::comparison, CmpOp::ge},
      {">=", K::comparison, CmpOp::ge},
      {"=>", K::comparison, CmpOp::ge},
      {"≧", K::comparison, CmpOp::ge},
      {"at least", K::comparison, CmpOp::ge},
      {"no less than", K::comparison, CmpOp::ge},
      {"not less than", K::comparison, CmpOp::ge},
      {"no fewer than", K::comparison, CmpOp::ge},
      {"greater than or equal to", K::comparison, CmpOp::ge},
      {"more than or equal to", K::comparison, CmpOp::ge},
      {"equal to or greater than", K::comparison, CmpOp::ge},
      {"equal to or more than", K::comparison, CmpOp::ge},
      {"minimum of", K::comparison, CmpOp::ge},
      {">", K::comparison, CmpOp::gt},
      {"greater than", K::comparison, CmpOp::gt},
      {"more than", K::comparison, CmpOp::gt},
      {"over", K::comparison, CmpOp::gt},
      {"above", K::comparison, CmpOp::gt},
      {"exceeding", K::comparison, CmpOp::gt},
      {"higher than", K::comparison, CmpOp::gt},
      {"older than", K::comparison, CmpOp::gt},
      {"≤", K::comparison, CmpOp::le},
      {"<=", K::comparison, CmpOp::le},
      {"=<", K::comparison, CmpOp::le},
      {"≦", K::comparison, CmpOp::le},
      {"at most", K::comparison, CmpOp::le},
      {"no more than", K::comparison, CmpOp::le},
      {"not more than", K::comparison, CmpOp::le},
      {"no greater than", K::comparison, CmpOp::le},
      {"not greater than", K::comparison, CmpOp::le},
      {"no higher than", K::comparison, CmpOp::le},
      {"not exceeding", K::comparison, CmpOp::le},
      {"not to exceed", K::comparison, CmpOp::le},
      {"less than or equal to", K::comparison, CmpOp::le},
      {"equal to or less than", K::comparison, CmpOp::le},
      {"up to", K::comparison, CmpOp::le},
      {"maximum of", K::comparison, CmpOp::le},
      {"<", K::comparison, CmpOp::lt},
      {"less than", K::comparison, CmpOp::lt},
      {"under", K::comparison, CmpOp::lt},
      {"below", K::comparison, CmpOp::lt},
      {"lower than", K::comparison, CmpOp::lt},
      {"younger than", K::comparison, CmpOp::lt},
      {"fewer than", K::comparison, CmpOp::lt},
      {"=", K::comparison, CmpOp::eq},
      {"equal to", K::comparison, CmpOp::eq},
      {"equals", K::comparison, CmpOp::eq},
      {"between", K::comparison, CmpOp::between},
      {"from", K::comparison, CmpOp::between},
      {"or older", K::comparison, CmpOp::ge, true},
      {"or more", K::comparison, CmpOp::ge, true},
      {"or greater", K::comparison, CmpOp::ge, true},
      {"or above", K::comparison, CmpOp::ge, true},
      {"or over", K::comparison, CmpOp::ge, true},
      {"or higher", K::comparison, CmpOp::ge, true},
      {"and older", K::comparison, CmpOp::ge, true},
      {"and above", K::comparison, CmpOp::ge, true},
      {"and over", K::comparison, CmpOp::ge, true},
      {"or less", K::comparison, CmpOp::le, true},
      {"or younger", K::comparison, CmpOp::le, true},
      {"or fewer", K::comparison, CmpOp::le, true},
      {"or below", K::comparison, CmpOp::le, true},
      {"or under", K::comparison, CmpOp::le, true},
      {"or lower", K::comparison, CmpOp::le, true},
      {"and under", K::comparison, CmpOp::le, true},
      {"and below", K::comparison, CmpOp::le, true},
      {"and younger", K::comparison, CmpOp::le, true},
      {"not", K::negation},
      {"no", K::negation},
      {"non", K::negation},
      {"never", K::negation},
      {"without", K::negation},
      {"and", K::connector},
      {"to", K::connector},
      {"-", K::connector},
      {"–", K::connector},
      {"—", K::connector},
      {"through", K::connector},
      // Filler words are consumed without producing a lexeme so that
      // "≥ 18 years of age" or "BMI: 20 - 30" stay contiguous.
      {":", K::unknown, std::nullopt, false, true},
      {"(", K::unknown, std::nullopt, false, true},
      {")", K::unknown, std::nullopt, false, true},
      {"of", K::unknown, std::nullopt, false, true},
      {"is", K::unknown, std::nullopt, false, true},
      {"are", K::unknown, std::nullopt, false, true},
      {"be", K::unknown, std::nullopt, false, true},
      {"must", K::unknown, std::nullopt, false, true},
      {"should", K::unknown, std::nullopt, false, true},
      {"a", K::unknown, std::nullopt, false, true},
      {"an", K::unknown, std::nullopt, false, true},
      {"the", K::unknown, std::nullopt, false, true},
  };
  return phrases;
}

std::vector<std::string> token_norms(std::string_view s) {
  std::vector<std::string> out;
  for (const auto& t : tokenize(s)) out.push_back(t.norm());
  return out;
}

std::string join_range(const std::vector<std::string>& norms, std::size_t begin, std::size_t end, std::string_view sep) {
  std::string out;
  for (std::size_t k = begin; k < end; ++k) {
    if (k > begin) out += sep;
    out += norms[k];
  }
  return out;
}

bool is_three_digit_group(const Token& t) {
  return t.surface.size() == 3 && std::all_of(t.surface.begin(), t.surface.end(), [](char c) { return c >= '0' && c <= '9'; });
}

}  // namespace

std::string_view to_string(LexKind k) {
  for (const auto& [kind, name] : kKindNames)
    if (kind == k) return name;
  return "unknown";
}

std::optional<LexKind> parse_lex_kind(std::string_view s) {
  for (const auto& [kind, name] : kKindNames)
    if (name == s) return kind;
  return std::nullopt;
}

std::string_view to_string(CmpOp op) {
  switch (op) {
    case CmpOp::lt: return "<";
    case CmpOp::le: return "≤";
    case CmpOp::gt: return ">";
    case CmpOp::ge: return "≥";
    case CmpOp::eq: return "=";
    case CmpOp::between: return "between";
  }
  return "?";
}

Lexicon::Lexicon(const KnowledgeBase& kb) {
  for (const auto& p : fixed_phrases()) {
    auto norms = token_norms(p.text);
    max_phrase_tokens_ = std::max(max_phrase_tokens_, norms.size());
    phrases_[join_range(norms, 0, norms.size(), " ")] = Entry{p.kind, std::nullopt, std::nullopt, p.op, p.postfix, p.filler};
  }
  for (const auto& [id, def] : kb.attributes()) {
    for (const auto& name : def.names()) {
      auto norms = token_norms(name);
      if (norms.empty()) continue;
      auto key = join_range(norms, 0, norms.size(), " ");
      auto it = phrases_.find(key);
      if (it != phrases_.end()) {
        if (it->second.kind != LexKind::attribute)
          spdlog::warn("attribute alias '{}' of '{}' shadows a built-in phrase; ignored", name, id);
        continue;  // ids iterate in sorted order: first claim wins
      }
      max_phrase_tokens_ = std::max(max_phrase_tokens_, norms.size());
      phrases_.emplace(std::move(key), Entry{LexKind::attribute, id, std::nullopt, std::nullopt, false, false});
    }
    for (const auto& [unit, factor] : def.accepted_units) {
      if (unit.empty()) continue;
      auto norms = token_norms(unit);
      max_unit_tokens_ = std::max(max_unit_tokens_, norms.size());
      units_.emplace(join_range(norms, 0, norms.size(), ""), unit);
    }
  }
}

std::vector<LexToken> Lexicon::lex(const std::vector<Token>& line_tokens) const {
  std::vector<LexToken> out;
  const auto n = line_tokens.size();
  std::vector<std::string> norms;
  norms.reserve(n);
  for (const auto& t : line_tokens) norms.push_back(t.norm());

  std::size_t i = 0;
  while (i < n) {
    std::size_t phrase_len = 0;
    const Entry* phrase = nullptr;
    for (auto len = std::min(max_phrase_tokens_, n - i); len >= 1; --len) {
      auto it = phrases_.find(join_range(norms, i, i + len, " "));
      if (it != phrases_.end()) {
        phrase = &it->second;
        phrase_len = len;
        break;
      }
    }
    std::size_t unit_len = 0;
    const std::string* unit = nullptr;
    for (auto len = std::min(max_unit_tokens_, n - i); len >= 1; --len) {
      auto it = units_.find(join_range(norms, i, i + len, ""));
      if (it != units_.end()) {
        unit = &it->second;
        unit_len = len;
        break;
      }
    }

    LexToken tok;
    tok.first_token = i;
    const bool after_number = !out.empty() && out.back().kind == LexKind::number;

    if (line_tokens[i].is_number() && !(unit && unit_len >= 3)) {
      std::string digits = line_tokens[i].surface;
      std::size_t last = i;
      // Thousands separators: "100,000" tokenizes as [100][,][000].
      while (digits.find('.') == std::string::npos && last + 2 < n && line_tokens[last + 1].surface == "," &&
             line_tokens[last].end == line_tokens[last + 1].start &&
             line_tokens[last + 1].end == line_tokens[last + 2].start && is_three_digit_group(line_tokens[last + 2])) {
        digits += line_tokens[last + 2].surface;
        last += 2;
      }
      tok.kind = LexKind::number;
      tok.value = text::parse_double(digits);
      tok.surface = digits;
      tok.last_token = last;
      out.push_back(std::move(tok));
      i = last + 1;
      continue;
    }

    const bool take_unit = unit && (unit_len > phrase_len || (unit_len == phrase_len && after_number));
    if (take_unit) {
      tok.kind = LexKind::unit;
      tok.unit_symbol = *unit;
      tok.surface = *unit;
      tok.last_token = i + unit_len - 1;
      out.push_back(std::move(tok));
      i += unit_len;
      continue;
    }
    if (phrase) {
      if (!phrase->filler) {
        tok.kind = phrase->kind;
        tok.surface = join_range(norms, i, i + phrase_len, " ");
        tok.last_token = i + phrase_len - 1;
        tok.attribute_id = phrase->attribute_id;
        tok.op = phrase->op;
        tok.postfix = phrase->postfix;
        out.push_back(std::move(tok));
      }
      i += phrase_len;
      continue;
    }
    tok.kind = LexKind::unknown;
    tok.surface = norms[i];
    tok.last_token = i;
    out.push_back(std::move(tok));
    ++i;
  }
  LexToken end;
  end.kind = LexKind::end_of_string;
  end.first_token = n;
  end.last_token = n;
  out.push_back(std::move(end));
  return out;
}

std::vector<LexToken> lex(const std::vector<Token>& line_tokens, const Lexicon& lexicon) {
  return lexicon.lex(line_tokens);
}

// ---------------------------------------------------------------- grammar

Grammar Grammar::parse(std::string_view source_text, std::string_view source_name) {
  Grammar g;
  std::map<std::string, int, std::less<>> ids;
  const auto intern = [&](const std::string& name) {
    auto [it, inserted] = ids.emplace(name, static_cast<int>(g.symbols_.size()));
    if (inserted) g.symbols_.push_back(name);
    return it->second;
  };

  std::size_t number = 0;
  for (auto& raw : text::split(source_text, '\n')) {
    ++number;
    auto hash = raw.find('#');
    auto line = text::trim(std::string_view(raw).substr(0, hash));
    if (line.empty()) continue;
    const auto where = std::string(source_name) + ":" + std::to_string(number);
    auto arrow = line.find("->");
    if (arrow == std::string_view::npos) throw LoadError(where + ": expected 'LHS -> RHS'");
    auto lhs = std::string(text::trim(line.substr(0, arrow)));
    std::istringstream rhs_stream{std::string(line.substr(arrow + 2))};
    std::vector<std::string> rhs;
    for (std::string sym; rhs_stream >> sym;) rhs.push_back(sym);
    if (lhs.empty() || lhs.find(' ') != std::string::npos) throw LoadError(where + ": malformed left-hand side");
    if (parse_lex_kind(lhs)) throw LoadError(where + ": terminal kind '" + lhs + "' used as a nonterminal");

    Production p;
    p.lhs = intern(lhs);
    if (rhs.size() == 1) {
      auto kind = parse_lex_kind(rhs[0]);
      if (!kind)
        throw LoadError(where + ": unit production '" + lhs + " -> " + rhs[0] +
                        "' is not in CYK form (expected a terminal kind)");
      p.terminal = *kind;
    } else if (rhs.size() == 2) {
      for (const auto& sym : rhs)
        if (parse_lex_kind(sym))
          throw LoadError(where + ": terminal kind '" + sym + "' inside a binary production; add a preterminal");
      p.left = intern(rhs[0]);
      p.right = intern(rhs[1]);
    } else {
      throw LoadError(where + ": productions must have one terminal or two nonterminals");
    }
    g.productions_.push_back(p);
  }

  auto start = ids.find(kStartSymbol);
  if (start == ids.end()) throw LoadError(std::string(source_name) + ": no productions for start symbol CRITERION");
  g.start_ = start->second;

  // Productive-symbol fixpoint: the start symbol must derive some sentence.
  std::vector<bool> productive(g.symbols_.size(), false);
  for (bool changed = true; changed;) {
    changed = false;
    for (const auto& p : g.productions_) {
      if (productive[p.lhs]) continue;
      if (p.preterminal() || (productive[p.left] && productive[p.right])) {
        productive[p.lhs] = true;
        changed = true;
      }
    }
  }
  if (!productive[g.start_]) throw LoadError(std::string(source_name) + ": start symbol CRITERION derives no sentence");
  return g;
}

Grammar Grammar::load(const std::filesystem::path& path) { return parse(read_file(path), path.string()); }

std::vector<LexKind> Grammar::terminal_kinds() const {
  std::vector<LexKind> out;
  for (const auto& p : productions_)
    if (p.terminal && std::find(out.begin(), out.end(), *p.terminal) == out.end()) out.push_back(*p.terminal);
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------- CYK

namespace {

int compare_trees(const ParseTree& a, const ParseTree& b) {
  if (a.production != b.production) return a.production < b.production ? -1 : 1;
  if (a.children.size() != b.children.size()) return a.children.size() < b.children.size() ? -1 : 1;
  if (a.children.empty()) return 0;
  const auto split_a = a.children[0].end, split_b = b.children[0].end;
  if (split_a != split_b) return split_a < split_b ? -1 : 1;
  if (int c = compare_trees(a.children[0], b.children[0])) return c;
  return compare_trees(a.children[1], b.children[1]);
}

constexpr std::size_t kMaxTreesPerCell = 4096;

class Chart {
 public:
  Chart(const std::vector<LexKind>& kinds, const Grammar& g)
      : n_(kinds.size()), symbols_(g.symbols().size()), g_(g), present_(n_ * (n_ + 1) * symbols_, 0), backs_(n_ * (n_ + 1)) {
    const auto& prods = g.productions();
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t p = 0; p < prods.size(); ++p)
        if (prods[p].terminal && *prods[p].terminal == kinds[i]) add(i, 1, prods[p].lhs, static_cast<int>(p), 0);
    for (std::size_t len = 2; len <= n_; ++len)
      for (std::size_t i = 0; i + len <= n_; ++i)
        for (std::size_t p = 0; p < prods.size(); ++p) {
          const auto& prod = prods[p];
          if (prod.terminal) continue;
          for (std::size_t k = 1; k < len; ++k)
            if (has(i, k, prod.left) && has(i + k, len - k, prod.right)) add(i, len, prod.lhs, static_cast<int>(p), k);
        }
  }

  bool has(std::size_t i, std::size_t len, int sym) const { return present_[(cell(i, len)) * symbols_ + sym] != 0; }

  // All derivations of `sym` over [i, i+len), in canonical order.
  const std::vector<ParseTree>& trees(std::size_t i, std::size_t len, int sym) {
    const auto key = cell(i, len) * symbols_ + static_cast<std::size_t>(sym);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    std::vector<ParseTree> out;
    for (const auto& b : backs_[cell(i, len)]) {
      if (b.symbol != sym) continue;
      const auto& prod = g_.productions()[b.production];
      if (prod.terminal) {
        out.push_back(ParseTree{sym, b.production, i, i + 1, {}});
        continue;
      }
      const auto& lefts = trees(i, b.split, prod.left);
      const auto& rights = trees(i + b.split, len - b.split, prod.right);
      for (const auto& l : lefts)
        for (const auto& r : rights) {
          if (out.size() >= kMaxTreesPerCell) break;
          out.push_back(ParseTree{sym, b.production, i, i + len, {l, r}});
        }
    }
    if (out.size() >= kMaxTreesPerCell) spdlog::warn("parse chart cell truncated at {} trees", kMaxTreesPerCell);
    return memo_.emplace(key, std::move(out)).first->second;
  }

 private:
  struct Back {
    int symbol;
    int production;
    std::size_t split;
  };

  std::size_t cell(std::size_t i, std::size_t len) const { return i * (n_ + 1) + len; }

  void add(std::size_t i, std::size_t len, int sym, int production, std::size_t split) {
    present_[cell(i, len) * symbols_ + sym] = 1;
    backs_[cell(i, len)].push_back(Back{sym, production, split});
  }

  std::size_t n_;
  std::size_t symbols_;
  const Grammar& g_;
  std::vector<std::uint8_t> present_;
  std::vector<std::vector<Back>> backs_;
  std::map<std::size_t, std::vector<ParseTree>> memo_;
};

}  // namespace

bool tree_less(const ParseTree& a, const ParseTree& b) {
  if (a.begin != b.begin) return a.begin < b.begin;
  if (a.end - a.begin != b.end - b.begin) return a.end - a.begin < b.end - b.begin;
  return compare_trees(a, b) < 0;
}

std::vector<ParseTree> parse_cyk(const std::vector<LexKind>& kinds, const Grammar& grammar) {
  std::vector<ParseTree> out;
  if (kinds.empty()) return out;
  Chart chart(kinds, grammar);
  const auto n = kinds.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t len = 1; i + len <= n; ++len)
      if (chart.has(i, len, grammar.start())) {
        const auto& ts = chart.trees(i, len, grammar.start());
        out.insert(out.end(), ts.begin(), ts.end());
      }
  return out;
}

std::vector<ParseTree> parse_cyk(const std::vector<LexToken>& tokens, const Grammar& grammar) {
  std::vector<LexKind> kinds;
  kinds.reserve(tokens.size());
  for (const auto& t : tokens) kinds.push_back(t.kind);
  return parse_cyk(kinds, grammar);
}

std::vector<ParseTree> prune(std::vector<ParseTree> trees) {
  std::sort(trees.begin(), trees.end(), tree_less);
  trees.erase(std::unique(trees.begin(), trees.end()), trees.end());
  std::vector<ParseTree> out;
  for (const auto& t : trees) {
    const bool contained = std::any_of(trees.begin(), trees.end(), [&](const ParseTree& u) {
      return u.begin <= t.begin && t.end <= u.end && (u.end - u.begin) > (t.end - t.begin);
    });
    if (!contained) out.push_back(t);
  }
  return out;
}

// ---------------------------------------------------------------- interpreter

bool AttributeCriterion::satisfied_by(double value) const {
  const bool above = !lower || value > lower->value || (lower->inclusive && value == lower->value);
  const bool below = !upper || value < upper->value || (upper->inclusive && value == upper->value);
  const bool inside = above && below;
  return negated ? !inside : inside;
}

AttributeCriterion complement(const AttributeCriterion& c) {
  AttributeCriterion out = c;
  if (c.lower && c.upper) {
    out.negated = !c.negated;
  } else if (c.lower) {
    out.upper = Bound{c.lower->value, !c.lower->inclusive};
    out.lower.reset();
  } else if (c.upper) {
    out.lower = Bound{c.upper->value, !c.upper->inclusive};
    out.upper.reset();
  }
  return out;
}

double to_canonical(double value, std::string_view unit, const AttributeDef& def) {
  auto it = def.accepted_units.find(std::string(unit));
  if (it == def.accepted_units.end())
    throw EvaluationError("unit '" + std::string(unit) + "' is not accepted by attribute '" + def.id + "'");
  return text::snap(value * it->second);
}

double from_canonical(double value, std::string_view unit, const AttributeDef& def) {
  auto it = def.accepted_units.find(std::string(unit));
  if (it == def.accepted_units.end())
    throw EvaluationError("unit '" + std::string(unit) + "' is not accepted by attribute '" + def.id + "'");
  return value / it->second;
}

namespace {

void collect_leaves(const ParseTree& t, std::vector<std::size_t>& out) {
  if (t.children.empty()) {
    out.push_back(t.begin);
    return;
  }
  for (const auto& c : t.children) collect_leaves(c, out);
}

struct Quantity {
  std::size_t pos;
  double value;
  std::optional<std::string> unit;
};

struct Comparison {
  std::size_t pos;
  CmpOp op;
  bool postfix;
};

CmpOp mirror(CmpOp op) {
  switch (op) {
    case CmpOp::lt: return CmpOp::gt;
    case CmpOp::le: return CmpOp::ge;
    case CmpOp::gt: return CmpOp::lt;
    case CmpOp::ge: return CmpOp::le;
    default: return op;
  }
}

void tighten_lower(std::optional<Bound>& cur, Bound b) {
  if (!cur || b.value > cur->value || (b.value == cur->value && !b.inclusive)) cur = b;
}

void tighten_upper(std::optional<Bound>& cur, Bound b) {
  if (!cur || b.value < cur->value || (b.value == cur->value && !b.inclusive)) cur = b;
}

void apply(AttributeCriterion& c, CmpOp op, double v) {
  switch (op) {
    case CmpOp::lt: tighten_upper(c.upper, {v, false}); break;
    case CmpOp::le: tighten_upper(c.upper, {v, true}); break;
    case CmpOp::gt: tighten_lower(c.lower, {v, false}); break;
    case CmpOp::ge: tighten_lower(c.lower, {v, true}); break;
    case CmpOp::eq:
    case CmpOp::between:
      tighten_lower(c.lower, {v, true});
      tighten_upper(c.upper, {v, true});
      break;
  }
}

}  // namespace

std::vector<AttributeCriterion> evaluate(const ParseTree& tree, const std::vector<LexToken>& tokens,
                                         const KnowledgeBase& kb) {
  std::vector<std::size_t> leaves;
  collect_leaves(tree, leaves);

  std::optional<std::string> attribute_id;
  std::size_t attribute_pos = 0;
  std::size_t negations = 0;
  std::vector<Quantity> quantities;
  std::vector<Comparison> comparisons;
  for (std::size_t k = 0; k < leaves.size(); ++k) {
    const auto& tok = tokens.at(leaves[k]);
    switch (tok.kind) {
      case LexKind::attribute:
        if (attribute_id && *attribute_id != *tok.attribute_id) return {};
        if (!attribute_id) attribute_pos = k;
        attribute_id = tok.attribute_id;
        break;
      case LexKind::negation: ++negations; break;
      case LexKind::number: quantities.push_back({k, *tok.value, std::nullopt}); break;
      case LexKind::unit:
        if (!quantities.empty() && quantities.back().pos + 1 == k) quantities.back().unit = tok.unit_symbol;
        break;
      case LexKind::comparison: comparisons.push_back({k, *tok.op, tok.postfix}); break;
      default: break;
    }
  }
  if (!attribute_id || quantities.empty() || quantities.size() > 2) return {};
  const AttributeDef* def = kb.find_attribute(*attribute_id);
  if (!def) return {};

  // A range written with one unit ("20 - 30 kg/m2") applies it to both ends.
  if (quantities.size() == 2) {
    if (!quantities[0].unit) quantities[0].unit = quantities[1].unit;
    if (!quantities[1].unit) quantities[1].unit = quantities[0].unit;
  }
  std::vector<double> values;
  for (const auto& q : quantities) values.push_back(to_canonical(q.value, q.unit.value_or(def->canonical_unit), *def));

  AttributeCriterion c;
  c.attribute_id = *attribute_id;
  c.unit = def->canonical_unit;

  if (quantities.size() == 1) {
    if (comparisons.size() > 1) return {};
    if (comparisons.empty()) {
      apply(c, CmpOp::eq, values[0]);
    } else {
      const auto& cmp = comparisons[0];
      if (cmp.op == CmpOp::between) return {};
      // "18 < age": comparison between number and a trailing attribute.
      const bool reversed = cmp.pos > quantities[0].pos && attribute_pos > cmp.pos && !cmp.postfix;
      apply(c, reversed ? mirror(cmp.op) : cmp.op, values[0]);
    }
  } else {
    const bool range = comparisons.empty() || (comparisons.size() == 1 && comparisons[0].op == CmpOp::between);
    if (range) {
      c.lower = Bound{values[0], true};
      c.upper = Bound{values[1], true};
    } else if (comparisons.size() == 2) {
      for (const auto& cmp : comparisons) {
        if (cmp.op == CmpOp::between) return {};
        // Prefix comparisons bind the next number, postfix ones the previous.
        std::optional<std::size_t> q;
        for (std::size_t k = 0; k < quantities.size(); ++k) {
          if (cmp.postfix ? quantities[k].pos < cmp.pos : quantities[k].pos > cmp.pos) {
            if (cmp.postfix || !q) q = k;
          }
        }
        if (!q) return {};
        apply(c, cmp.op, values[*q]);
      }
    } else {
      return {};
    }
  }

  if (c.lower && c.upper &&
      (c.lower->value > c.upper->value ||
       (c.lower->value == c.upper->value && !(c.lower->inclusive && c.upper->inclusive)))) {
    throw ContradictionError("inverted bounds for attribute '" + c.attribute_id + "'", c);
  }
  if (negations % 2 == 1) c = complement(c);
  return {c};
}

LineExtraction extract_attributes(const std::vector<Token>& line_tokens, const Lexicon& lexicon,
                                  const Grammar& grammar, const KnowledgeBase& kb) {
  const auto lexemes = lexicon.lex(line_tokens);
  const auto all = parse_cyk(lexemes, grammar);
  const auto overlaps = [](const ParseTree& a, const ParseTree& b) { return a.begin < b.end && b.begin < a.end; };

  // A contradictory reading that overlaps another kept tree is an attachment
  // error ("mmse = 30 and no more than 2 prior lines"): drop every tree
  // covering its span and prune again so the nested readings resurface.
  std::vector<std::pair<std::size_t, std::size_t>> rejected;
  while (true) {
    std::vector<ParseTree> candidates;
    for (const auto& t : all)
      if (std::none_of(rejected.begin(), rejected.end(),
                       [&](const auto& r) { return t.begin <= r.first && r.second <= t.end; }))
        candidates.push_back(t);
    const auto trees = prune(std::move(candidates));

    LineExtraction out;
    bool retry = false;
    for (const auto& tree : trees) {
      try {
        for (auto& c : evaluate(tree, lexemes, kb)) {
          const auto last_lexeme = tree.end - 1;
          ExtractedCriterion e{std::move(c), lexemes[tree.begin].first_token,
                               std::min(lexemes[last_lexeme].last_token, line_tokens.empty() ? 0 : line_tokens.size() - 1)};
          const bool seen = std::any_of(out.criteria.begin(), out.criteria.end(),
                                        [&](const ExtractedCriterion& x) { return x.criterion == e.criterion; });
          if (!seen) out.criteria.push_back(std::move(e));
        }
      } catch (const ContradictionError& e) {
        const bool attached_wrong = std::any_of(trees.begin(), trees.end(), [&](const ParseTree& o) {
          return &o != &tree && overlaps(o, tree);
        });
        if (attached_wrong) {
          rejected.emplace_back(tree.begin, tree.end);
          retry = true;
          break;
        }
        out.contradictions.push_back(e);
      } catch (const EvaluationError& e) {
        out.warnings.emplace_back(e.what());
      }
    }
    if (!retry) return out;
  }
}

}  // namespace critex::cfg
