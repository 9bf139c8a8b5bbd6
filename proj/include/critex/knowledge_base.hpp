#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace critex {

enum class EntityCategory {
  treatment,
  chronic_disease,
  cancer,
  gender,
  pregnancy,
  allergy,
  contraception_consent,
  language_literacy,
  technology_access,
  ethnicity,
};

inline constexpr std::size_t kEntityCategoryCount = 10;

std::string_view to_string(EntityCategory c);
// Throws LoadError on anything outside the closed set.
EntityCategory parse_category(std::string_view s);
const std::vector<EntityCategory>& all_categories();

struct Concept {
  std::string id;
  std::string preferred_name;
  std::set<std::string> synonyms;
  EntityCategory category = EntityCategory::treatment;
  std::optional<std::string> parent_id;

  bool operator==(const Concept&) const = default;
};

enum class ValueKind { numeric, ordinal };

std::string_view to_string(ValueKind k);

struct AttributeDef {
  std::string id;
  std::string canonical_name;
  std::set<std::string> aliases;
  ValueKind value_kind = ValueKind::numeric;
  // Empty string means dimensionless.
  std::string canonical_unit;
  // unit symbol -> factor such that value_in_canonical = value * factor.
  std::map<std::string, double> accepted_units;

  // All surface forms: canonical name plus aliases.
  std::vector<std::string> names() const;
  bool operator==(const AttributeDef&) const = default;
};

// Immutable after construction; share freely across threads.
class KnowledgeBase {
 public:
  KnowledgeBase() = default;
  // Validates every invariant; throws LoadError naming the offending id.
  KnowledgeBase(std::vector<Concept> concepts, std::vector<AttributeDef> attributes);

  const Concept* find_concept(std::string_view id) const;
  const AttributeDef* find_attribute(std::string_view id) const;
  bool contains(std::string_view id) const { return find_concept(id) || find_attribute(id); }

  // Concept or attribute ids whose name/synonym equals normalize_name(surface).
  std::set<std::string> lookup_exact(std::string_view surface) const;

  // True iff ancestor_id is reachable from descendant_id through one or more
  // parent links. Throws LookupError for ids absent from the knowledge base.
  bool is_ancestor(std::string_view ancestor_id, std::string_view descendant_id) const;

  const std::map<std::string, Concept, std::less<>>& concepts() const { return concepts_; }
  const std::map<std::string, AttributeDef, std::less<>>& attributes() const { return attributes_; }
  const std::map<std::string, std::set<std::string>, std::less<>>& name_index() const { return name_index_; }

  // Display name for a concept or attribute id (empty when unknown).
  std::string display_name(std::string_view id) const;

  bool operator==(const KnowledgeBase& other) const {
    return concepts_ == other.concepts_ && attributes_ == other.attributes_;
  }

 private:
  std::map<std::string, Concept, std::less<>> concepts_;
  std::map<std::string, AttributeDef, std::less<>> attributes_;
  std::map<std::string, std::set<std::string>, std::less<>> name_index_;
};

KnowledgeBase load_knowledge_base(const std::filesystem::path& concept_file,
                                  const std::filesystem::path& attribute_file);

// Parsers over in-memory TSV text; `source` labels error messages.
std::vector<Concept> parse_concepts(std::string_view tsv, std::string_view source = "<concepts>");
std::vector<AttributeDef> parse_attributes(std::string_view tsv, std::string_view source = "<attributes>");

// Serializers producing the same TSV layouts, ids in sorted order.
std::string write_concepts(const KnowledgeBase& kb);
std::string write_attributes(const KnowledgeBase& kb);

std::string read_file(const std::filesystem::path& path);

}  // namespace critex
