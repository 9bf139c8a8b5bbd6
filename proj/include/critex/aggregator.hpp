#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "critex/attribute_cfg.hpp"
#include "critex/knowledge_base.hpp"
#include "critex/preprocessor.hpp"
#include "critex/relation_extractor.hpp"

namespace critex {

struct EntityConstraint {
  bool requires_presence = true;
  bool operator==(const EntityConstraint&) const = default;
};

using Constraint = std::variant<EntityConstraint, cfg::AttributeCriterion>;

// Where a fact came from. Mention details are filled for entity facts and
// feed the evaluation report.
struct Provenance {
  BlockKind block = BlockKind::inclusion;
  std::size_t line_index = 0;
  std::string text;
  std::size_t first_token = 0;
  std::size_t last_token = 0;
  std::string surface;
  std::optional<EntityCategory> category;
  std::optional<Polarity> polarity;

  bool operator==(const Provenance&) const = default;
};

// The (concept, constraint, trial) triple. `form` is the block whose
// semantics the constraint is written in: inclusion facts must hold,
// exclusion facts must not.
struct CriterionFact {
  std::string trial_id;
  std::string concept_ref;
  Constraint constraint;
  BlockKind form = BlockKind::inclusion;
  std::vector<Provenance> provenance;

  bool is_entity() const { return std::holds_alternative<EntityConstraint>(constraint); }
  const EntityConstraint& entity() const { return std::get<EntityConstraint>(constraint); }
  const cfg::AttributeCriterion& attribute() const { return std::get<cfg::AttributeCriterion>(constraint); }

  // Equality ignoring provenance.
  bool same_claim(const CriterionFact& o) const {
    return trial_id == o.trial_id && concept_ref == o.concept_ref && constraint == o.constraint && form == o.form;
  }
  bool operator==(const CriterionFact&) const = default;
};

enum class DropReason { duplicate, generalized, contradiction, intent_conflict };
std::string_view to_string(DropReason r);
DropReason parse_drop_reason(std::string_view s);

struct DroppedFact {
  CriterionFact fact;
  DropReason reason = DropReason::duplicate;
  bool operator==(const DroppedFact&) const = default;
};

struct EligibilityProfile {
  std::string trial_id;
  std::vector<CriterionFact> facts;  // inclusion form, canonical order
  std::vector<DroppedFact> dropped;
};

// Winner stays, loser is dropped when both are required present.
struct IntentRule {
  std::string winner;
  std::string loser;
  std::string note;
};

std::vector<IntentRule> parse_intent_rules(std::string_view tsv, std::string_view source = "<intents>");
std::vector<IntentRule> load_intent_rules(const std::filesystem::path& path);

// Negates the constraint and toggles the form. Applying it twice yields the
// original fact.
CriterionFact cast_exclusion(const CriterionFact& fact);

std::vector<CriterionFact> deduplicate(std::vector<CriterionFact> facts, std::vector<DroppedFact>* audit = nullptr);

std::vector<CriterionFact> drop_generalized(std::vector<CriterionFact> facts, const KnowledgeBase& kb,
                                            std::vector<DroppedFact>* audit = nullptr);

struct ContradictionResult {
  std::vector<CriterionFact> retained;
  std::vector<DroppedFact> dropped;
};

ContradictionResult remove_contradictions(std::vector<CriterionFact> facts, const std::vector<IntentRule>& intents);

// cast_exclusion -> deduplicate -> drop_generalized -> remove_contradictions
// -> per-attribute interval intersection. Idempotent.
EligibilityProfile aggregate(const std::vector<CriterionFact>& trial_facts, const KnowledgeBase& kb,
                             const std::vector<IntentRule>& intents);

enum class Verdict { satisfied, violated, indeterminate };
std::string_view to_string(Verdict v);

struct FactVerdict {
  std::size_t fact_index = 0;
  Verdict verdict = Verdict::indeterminate;
};

struct PatientResult {
  // satisfied = eligible, violated = ineligible.
  Verdict overall = Verdict::satisfied;
  std::vector<FactVerdict> facts;
};

// Keys are knowledge-base ids. Entity values: present|absent. Attribute
// values: a number with an optional unit suffix ("480 months").
using PatientRecord = std::map<std::string, std::string, std::less<>>;

// Conjunction over the profile with three-valued logic: any violated fact
// makes the patient ineligible, otherwise any missing value leaves the result
// indeterminate. Throws EvaluationError naming the fact on malformed values.
PatientResult evaluate_patient(const EligibilityProfile& profile, const PatientRecord& patient,
                               const KnowledgeBase& kb);

// Orders facts canonically: concept_ref, then constraint.
void sort_facts(std::vector<CriterionFact>& facts);

}  // namespace critex
