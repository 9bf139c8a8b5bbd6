#include "critex/knowledge_base.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <sstream>

#include "critex/error.hpp"
#include "critex/text.hpp"

namespace critex {

namespace {

constexpr std::array<std::pair<EntityCategory, std::string_view>, kEntityCategoryCount> kCategoryNames{{
    {EntityCategory::treatment, "treatment"},
    {EntityCategory::chronic_disease, "chronic_disease"},
    {EntityCategory::cancer, "cancer"},
    {EntityCategory::gender, "gender"},
    {EntityCategory::pregnancy, "pregnancy"},
    {EntityCategory::allergy, "allergy"},
    {EntityCategory::contraception_consent, "contraception_consent"},
    {EntityCategory::language_literacy, "language_literacy"},
    {EntityCategory::technology_access, "technology_access"},
    {EntityCategory::ethnicity, "ethnicity"},
}};

constexpr std::string_view kDimensionless = "-";

std::string location(std::string_view source, std::size_t line) {
  return std::string(source) + ":" + std::to_string(line);
}

// Splits a data file into non-comment, non-blank lines with 1-based numbers.
std::vector<std::pair<std::size_t, std::string>> data_lines(std::string_view tsv) {
  std::vector<std::pair<std::size_t, std::string>> out;
  std::size_t number = 0;
  for (auto& raw : text::split(tsv, '\n')) {
    ++number;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    auto t = text::trim(raw);
    if (t.empty() || t.front() == '#') continue;
    out.emplace_back(number, std::move(raw));
  }
  return out;
}

std::set<std::string> parse_name_list(std::string_view field) {
  std::set<std::string> out;
  if (text::trim(field).empty()) return out;
  for (const auto& part : text::split(field, '|')) {
    auto name = text::normalize_name(part);
    if (!name.empty()) out.insert(std::move(name));
  }
  return out;
}

double parse_factor(std::string_view s, const std::string& where) {
  s = text::trim(s);
  std::optional<double> value;
  if (auto slash = s.find('/'); slash != std::string_view::npos) {
    auto num = text::parse_double(s.substr(0, slash));
    auto den = text::parse_double(s.substr(slash + 1));
    if (num && den && *den != 0) value = *num / *den;
  } else {
    value = text::parse_double(s);
  }
  if (!value) throw LoadError(where + ": invalid conversion factor '" + std::string(s) + "'");
  if (*value <= 0) throw LoadError(where + ": conversion factor must be positive, got '" + std::string(s) + "'");
  return *value;
}

std::string unit_key(std::string_view u) {
  auto t = text::to_lower(text::trim(u));
  return t == kDimensionless ? std::string() : t;
}

}  // namespace

std::string_view to_string(EntityCategory c) {
  for (const auto& [cat, name] : kCategoryNames)
    if (cat == c) return name;
  return "unknown";
}

EntityCategory parse_category(std::string_view s) {
  const auto key = text::to_lower(text::trim(s));
  for (const auto& [cat, name] : kCategoryNames)
    if (name == key) return cat;
  throw LoadError("unknown entity category '" + std::string(s) + "'");
}

const std::vector<EntityCategory>& all_categories() {
  static const std::vector<EntityCategory> cats = [] {
    std::vector<EntityCategory> v;
    for (const auto& [cat, name] : kCategoryNames) v.push_back(cat);
    return v;
  }();
  return cats;
}

std::string_view to_string(ValueKind k) { return k == ValueKind::numeric ? "numeric" : "ordinal"; }

std::vector<std::string> AttributeDef::names() const {
  std::vector<std::string> out{canonical_name};
  for (const auto& a : aliases)
    if (a != canonical_name) out.push_back(a);
  return out;
}

KnowledgeBase::KnowledgeBase(std::vector<Concept> concepts, std::vector<AttributeDef> attributes) {
  for (auto& c : concepts) {
    if (c.id.empty()) throw LoadError("concept with empty id");
    if (concepts_.count(c.id)) throw LoadError("duplicate concept id '" + c.id + "'");
    if (c.preferred_name.empty()) throw LoadError("concept '" + c.id + "' has an empty preferred name");
    if (c.preferred_name != text::normalize_name(c.preferred_name))
      throw LoadError("concept '" + c.id + "' preferred name is not normalized");
    for (const auto& s : c.synonyms)
      if (s.empty() || s != text::normalize_name(s))
        throw LoadError("concept '" + c.id + "' has an empty or unnormalized synonym");
    auto id = c.id;
    concepts_.emplace(std::move(id), std::move(c));
  }
  for (auto& a : attributes) {
    if (a.id.empty()) throw LoadError("attribute with empty id");
    if (attributes_.count(a.id) || concepts_.count(a.id)) throw LoadError("duplicate id '" + a.id + "'");
    if (a.canonical_name.empty()) throw LoadError("attribute '" + a.id + "' has an empty canonical name");
    auto it = a.accepted_units.find(a.canonical_unit);
    if (it == a.accepted_units.end()) a.accepted_units.emplace(a.canonical_unit, 1.0);
    else if (it->second != 1.0)
      throw LoadError("attribute '" + a.id + "': canonical unit '" + a.canonical_unit + "' must have factor 1");
    for (const auto& [unit, factor] : a.accepted_units)
      if (!(factor > 0)) throw LoadError("attribute '" + a.id + "': non-positive factor for unit '" + unit + "'");
    auto id = a.id;
    attributes_.emplace(std::move(id), std::move(a));
  }

  for (const auto& [id, c] : concepts_) {
    if (!c.parent_id) continue;
    auto parent = concepts_.find(*c.parent_id);
    if (parent == concepts_.end())
      throw LoadError("concept '" + id + "' has dangling parent '" + *c.parent_id + "'");
    if (parent->second.category != c.category)
      throw LoadError("concept '" + id + "' and parent '" + *c.parent_id + "' differ in category");
  }

  // Cycle check: walk every parent chain; single-parent forest makes this a
  // linked-list traversal with a three-colour marking.
  std::map<std::string_view, int> state;  // 0 unseen, 1 on current path, 2 done
  for (const auto& [id, c] : concepts_) {
    if (state[id] == 2) continue;
    std::vector<std::string_view> path;
    std::string_view cur = id;
    for (;;) {
      auto& st = state[cur];
      if (st == 2) break;
      if (st == 1) {
        auto begin = std::find(path.begin(), path.end(), cur);
        std::string cycle;
        for (auto p = begin; p != path.end(); ++p) cycle += std::string(*p) + " -> ";
        cycle += std::string(cur);
        throw LoadError("hierarchy cycle: " + cycle);
      }
      st = 1;
      path.push_back(cur);
      const auto& node = concepts_.find(cur)->second;
      if (!node.parent_id) break;
      cur = *node.parent_id;
    }
    for (auto p : path) state[p] = 2;
  }

  for (const auto& [id, c] : concepts_) {
    name_index_[c.preferred_name].insert(id);
    for (const auto& s : c.synonyms) name_index_[s].insert(id);
  }
  for (const auto& [id, a] : attributes_)
    for (const auto& n : a.names()) name_index_[n].insert(id);
}

const Concept* KnowledgeBase::find_concept(std::string_view id) const {
  auto it = concepts_.find(id);
  return it == concepts_.end() ? nullptr : &it->second;
}

const AttributeDef* KnowledgeBase::find_attribute(std::string_view id) const {
  auto it = attributes_.find(id);
  return it == attributes_.end() ? nullptr : &it->second;
}

std::set<std::string> KnowledgeBase::lookup_exact(std::string_view surface) const {
  const auto key = text::normalize_name(surface);
  if (key.empty()) return {};
  auto it = name_index_.find(key);
  return it == name_index_.end() ? std::set<std::string>{} : it->second;
}

bool KnowledgeBase::is_ancestor(std::string_view ancestor_id, std::string_view descendant_id) const {
  if (!contains(ancestor_id)) throw LookupError("unknown id '" + std::string(ancestor_id) + "'");
  if (!contains(descendant_id)) throw LookupError("unknown id '" + std::string(descendant_id) + "'");
  const Concept* node = find_concept(descendant_id);
  while (node && node->parent_id) {
    if (*node->parent_id == ancestor_id) return true;
    node = find_concept(*node->parent_id);
  }
  return false;
}

std::string KnowledgeBase::display_name(std::string_view id) const {
  if (auto c = find_concept(id)) return c->preferred_name;
  if (auto a = find_attribute(id)) return a->canonical_name;
  return {};
}

std::vector<Concept> parse_concepts(std::string_view tsv, std::string_view source) {
  std::vector<Concept> out;
  for (const auto& [number, line] : data_lines(tsv)) {
    const auto where = location(source, number);
    auto fields = text::split(line, '\t');
    if (fields.size() != 5) throw LoadError(where + ": expected 5 tab-separated fields, got " + std::to_string(fields.size()));
    Concept c;
    c.id = std::string(text::trim(fields[0]));
    c.preferred_name = text::normalize_name(fields[1]);
    c.synonyms = parse_name_list(fields[2]);
    c.synonyms.erase(c.preferred_name);
    try {
      c.category = parse_category(fields[3]);
    } catch (const LoadError& e) {
      throw LoadError(where + ": " + e.what());
    }
    if (auto parent = text::trim(fields[4]); !parent.empty()) c.parent_id = std::string(parent);
    if (c.id.empty()) throw LoadError(where + ": empty concept id");
    if (c.preferred_name.empty()) throw LoadError(where + ": empty preferred name for '" + c.id + "'");
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<AttributeDef> parse_attributes(std::string_view tsv, std::string_view source) {
  std::vector<AttributeDef> out;
  for (const auto& [number, line] : data_lines(tsv)) {
    const auto where = location(source, number);
    auto fields = text::split(line, '\t');
    if (fields.size() != 6) throw LoadError(where + ": expected 6 tab-separated fields, got " + std::to_string(fields.size()));
    AttributeDef a;
    a.id = std::string(text::trim(fields[0]));
    a.canonical_name = text::normalize_name(fields[1]);
    a.aliases = parse_name_list(fields[2]);
    a.aliases.erase(a.canonical_name);
    const auto kind = text::to_lower(text::trim(fields[3]));
    if (kind == "numeric") a.value_kind = ValueKind::numeric;
    else if (kind == "ordinal") a.value_kind = ValueKind::ordinal;
    else throw LoadError(where + ": unknown value kind '" + kind + "'");
    a.canonical_unit = unit_key(fields[4]);
    if (auto units = text::trim(fields[5]); !units.empty() && units != kDimensionless) {
      for (const auto& entry : text::split(units, ',')) {
        auto eq = entry.rfind('=');
        if (eq == std::string::npos) throw LoadError(where + ": unit entry '" + entry + "' lacks '='");
        auto unit = unit_key(entry.substr(0, eq));
        if (a.accepted_units.count(unit)) throw LoadError(where + ": unit '" + unit + "' listed twice");
        a.accepted_units.emplace(std::move(unit), parse_factor(entry.substr(eq + 1), where));
      }
    }
    if (a.id.empty()) throw LoadError(where + ": empty attribute id");
    out.push_back(std::move(a));
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

KnowledgeBase load_knowledge_base(const std::filesystem::path& concept_file,
                                  const std::filesystem::path& attribute_file) {
  auto concepts = parse_concepts(read_file(concept_file), concept_file.string());
  auto attributes = parse_attributes(read_file(attribute_file), attribute_file.string());
  return KnowledgeBase(std::move(concepts), std::move(attributes));
}

std::string write_concepts(const KnowledgeBase& kb) {
  std::string out = "# id\tpreferred_name\tsynonyms\tcategory\tparent_id\n";
  for (const auto& [id, c] : kb.concepts()) {
    out += id + '\t' + c.preferred_name + '\t';
    out += text::join({c.synonyms.begin(), c.synonyms.end()}, "|");
    out += '\t';
    out += to_string(c.category);
    out += '\t';
    out += c.parent_id.value_or("");
    out += '\n';
  }
  return out;
}

std::string write_attributes(const KnowledgeBase& kb) {
  std::string out = "# id\tcanonical_name\taliases\tvalue_kind\tcanonical_unit\taccepted_units\n";
  for (const auto& [id, a] : kb.attributes()) {
    out += id + '\t' + a.canonical_name + '\t';
    out += text::join({a.aliases.begin(), a.aliases.end()}, "|");
    out += '\t';
    out += to_string(a.value_kind);
    out += '\t';
    out += a.canonical_unit.empty() ? std::string(kDimensionless) : a.canonical_unit;
    out += '\t';
    std::vector<std::string> units;
    for (const auto& [u, f] : a.accepted_units)
      units.push_back((u.empty() ? std::string(kDimensionless) : u) + "=" + text::format_double(f));
    out += text::join(units, ",");
    out += '\n';
  }
  return out;
}

}  // namespace critex
