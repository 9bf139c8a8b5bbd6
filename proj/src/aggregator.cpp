#include "critex/aggregator.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <tuple>

#include "critex/error.hpp"
#include "critex/text.hpp"

namespace critex {

std::string_view to_string(DropReason r) {
  switch (r) {
    case DropReason::duplicate: return "duplicate";
    case DropReason::generalized: return "generalized";
    case DropReason::contradiction: return "contradiction";
    case DropReason::intent_conflict: return "intent_conflict";
  }
  return "unknown";
}

DropReason parse_drop_reason(std::string_view s) {
  for (auto r : {DropReason::duplicate, DropReason::generalized, DropReason::contradiction, DropReason::intent_conflict})
    if (to_string(r) == s) return r;
  throw LoadError("unknown drop reason '" + std::string(s) + "'");
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::satisfied: return "satisfied";
    case Verdict::violated: return "violated";
    case Verdict::indeterminate: return "indeterminate";
  }
  return "unknown";
}

std::vector<IntentRule> parse_intent_rules(std::string_view tsv, std::string_view source) {
  std::vector<IntentRule> out;
  std::size_t number = 0;
  for (auto& raw : text::split(tsv, '\n')) {
    ++number;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    auto t = text::trim(raw);
    if (t.empty() || t.front() == '#') continue;
    auto fields = text::split(raw, '\t');
    if (fields.size() < 2 || fields.size() > 3)
      throw LoadError(std::string(source) + ":" + std::to_string(number) + ": expected winner<TAB>loser<TAB>note");
    out.push_back(IntentRule{std::string(text::trim(fields[0])), std::string(text::trim(fields[1])),
                             fields.size() == 3 ? std::string(text::trim(fields[2])) : std::string()});
  }
  return out;
}

std::vector<IntentRule> load_intent_rules(const std::filesystem::path& path) {
  return parse_intent_rules(read_file(path), path.string());
}

CriterionFact cast_exclusion(const CriterionFact& fact) {
  CriterionFact out = fact;
  if (auto* e = std::get_if<EntityConstraint>(&out.constraint)) e->requires_presence = !e->requires_presence;
  else out.constraint = cfg::complement(std::get<cfg::AttributeCriterion>(fact.constraint));
  out.form = fact.form == BlockKind::exclusion ? BlockKind::inclusion : BlockKind::exclusion;
  return out;
}

namespace {

void merge_provenance(std::vector<Provenance>& into, const std::vector<Provenance>& from) {
  for (const auto& p : from)
    if (std::find(into.begin(), into.end(), p) == into.end()) into.push_back(p);
  std::sort(into.begin(), into.end(), [](const Provenance& a, const Provenance& b) {
    return std::tie(a.line_index, a.first_token, a.last_token, a.block, a.surface, a.text) <
           std::tie(b.line_index, b.first_token, b.last_token, b.block, b.surface, b.text);
  });
}

auto bound_key(const std::optional<cfg::Bound>& b) {
  return std::make_tuple(b.has_value(), b ? b->value : 0.0, b ? b->inclusive : false);
}

auto constraint_key(const Constraint& c) {
  if (auto* e = std::get_if<EntityConstraint>(&c))
    return std::make_tuple(0, e->requires_presence, bound_key(std::nullopt), bound_key(std::nullopt), false);
  const auto& a = std::get<cfg::AttributeCriterion>(c);
  return std::make_tuple(1, false, bound_key(a.lower), bound_key(a.upper), a.negated);
}

void audit(std::vector<DroppedFact>* log, const CriterionFact& f, DropReason r) {
  if (log) log->push_back(DroppedFact{f, r});
}

bool is_interval(const CriterionFact& f) { return !f.is_entity() && !f.attribute().negated; }

}  // namespace

void sort_facts(std::vector<CriterionFact>& facts) {
  std::stable_sort(facts.begin(), facts.end(), [](const CriterionFact& a, const CriterionFact& b) {
    return std::make_tuple(a.trial_id, a.concept_ref, constraint_key(a.constraint), a.form) <
           std::make_tuple(b.trial_id, b.concept_ref, constraint_key(b.constraint), b.form);
  });
}

std::vector<CriterionFact> deduplicate(std::vector<CriterionFact> facts, std::vector<DroppedFact>* log) {
  std::vector<CriterionFact> out;
  for (auto& f : facts) {
    auto it = std::find_if(out.begin(), out.end(), [&](const CriterionFact& g) { return g.same_claim(f); });
    if (it == out.end()) {
      out.push_back(std::move(f));
      continue;
    }
    merge_provenance(it->provenance, f.provenance);
    audit(log, f, DropReason::duplicate);
  }
  return out;
}

std::vector<CriterionFact> drop_generalized(std::vector<CriterionFact> facts, const KnowledgeBase& kb,
                                            std::vector<DroppedFact>* log) {
  std::vector<CriterionFact> out;
  for (const auto& f : facts) {
    bool general = false;
    if (f.is_entity() && kb.find_concept(f.concept_ref)) {
      general = std::any_of(facts.begin(), facts.end(), [&](const CriterionFact& g) {
        return g.is_entity() && g.form == f.form && g.entity() == f.entity() && kb.find_concept(g.concept_ref) &&
               kb.is_ancestor(f.concept_ref, g.concept_ref);
      });
    }
    if (general) audit(log, f, DropReason::generalized);
    else out.push_back(f);
  }
  return out;
}

ContradictionResult remove_contradictions(std::vector<CriterionFact> facts, const std::vector<IntentRule>& intents) {
  ContradictionResult result;
  std::vector<bool> drop(facts.size(), false);
  std::vector<DropReason> why(facts.size(), DropReason::contradiction);

  // Entity facts asserting both presence and absence of one concept.
  for (std::size_t i = 0; i < facts.size(); ++i)
    for (std::size_t j = i + 1; j < facts.size(); ++j) {
      const auto &a = facts[i], &b = facts[j];
      if (a.is_entity() && b.is_entity() && a.form == b.form && a.concept_ref == b.concept_ref &&
          a.entity().requires_presence != b.entity().requires_presence)
        drop[i] = drop[j] = true;
    }

  // Attribute intervals whose intersection is empty.
  std::map<std::pair<std::string, BlockKind>, std::vector<std::size_t>> by_attribute;
  for (std::size_t i = 0; i < facts.size(); ++i)
    if (is_interval(facts[i])) by_attribute[{facts[i].concept_ref, facts[i].form}].push_back(i);
  for (const auto& [key, members] : by_attribute) {
    cfg::AttributeCriterion meet;
    for (auto i : members) {
      const auto& a = facts[i].attribute();
      if (a.lower && (!meet.lower || a.lower->value > meet.lower->value ||
                      (a.lower->value == meet.lower->value && !a.lower->inclusive)))
        meet.lower = a.lower;
      if (a.upper && (!meet.upper || a.upper->value < meet.upper->value ||
                      (a.upper->value == meet.upper->value && !a.upper->inclusive)))
        meet.upper = a.upper;
    }
    const bool empty = meet.lower && meet.upper &&
                       (meet.lower->value > meet.upper->value ||
                        (meet.lower->value == meet.upper->value && !(meet.lower->inclusive && meet.upper->inclusive)));
    if (empty)
      for (auto i : members) drop[i] = true;
  }

  // Intent conflicts between two required-present concepts.
  const auto required = [&](const std::string& id) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < facts.size(); ++i)
      if (!drop[i] && facts[i].is_entity() && facts[i].form == BlockKind::inclusion && facts[i].concept_ref == id &&
          facts[i].entity().requires_presence)
        return i;
    return std::nullopt;
  };
  for (const auto& rule : intents) {
    auto w = required(rule.winner);
    if (!w) continue;
    while (auto l = required(rule.loser)) {
      drop[*l] = true;
      why[*l] = DropReason::intent_conflict;
    }
  }

  for (std::size_t i = 0; i < facts.size(); ++i) {
    if (drop[i]) result.dropped.push_back(DroppedFact{std::move(facts[i]), why[i]});
    else result.retained.push_back(std::move(facts[i]));
  }
  return result;
}

EligibilityProfile aggregate(const std::vector<CriterionFact>& trial_facts, const KnowledgeBase& kb,
                             const std::vector<IntentRule>& intents) {
  EligibilityProfile profile;
  if (!trial_facts.empty()) profile.trial_id = trial_facts.front().trial_id;

  std::vector<CriterionFact> facts;
  facts.reserve(trial_facts.size());
  for (const auto& f : trial_facts) facts.push_back(f.form == BlockKind::exclusion ? cast_exclusion(f) : f);

  facts = deduplicate(std::move(facts), &profile.dropped);
  facts = drop_generalized(std::move(facts), kb, &profile.dropped);
  auto split = remove_contradictions(std::move(facts), intents);
  profile.dropped.insert(profile.dropped.end(), split.dropped.begin(), split.dropped.end());

  // Intersect the surviving intervals of each attribute into one fact.
  std::vector<CriterionFact> out;
  for (auto& f : split.retained) {
    if (!is_interval(f)) {
      out.push_back(std::move(f));
      continue;
    }
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const CriterionFact& g) { return is_interval(g) && g.concept_ref == f.concept_ref; });
    if (it == out.end()) {
      out.push_back(std::move(f));
      continue;
    }
    auto& meet = std::get<cfg::AttributeCriterion>(it->constraint);
    const auto& a = f.attribute();
    if (a.lower && (!meet.lower || a.lower->value > meet.lower->value ||
                    (a.lower->value == meet.lower->value && !a.lower->inclusive)))
      meet.lower = a.lower;
    if (a.upper && (!meet.upper || a.upper->value < meet.upper->value ||
                    (a.upper->value == meet.upper->value && !a.upper->inclusive)))
      meet.upper = a.upper;
    merge_provenance(it->provenance, f.provenance);
  }
  sort_facts(out);
  profile.facts = std::move(out);
  return profile;
}

namespace {

std::optional<double> parse_measure(std::string_view value, const AttributeDef& def) {
  value = text::trim(value);
  std::size_t k = 0;
  while (k < value.size() && (std::isdigit(static_cast<unsigned char>(value[k])) || value[k] == '.' || value[k] == '-' ||
                              value[k] == '+'))
    ++k;
  auto number = text::parse_double(value.substr(0, k));
  if (!number) return std::nullopt;
  const auto unit = text::to_lower(text::trim(value.substr(k)));
  return cfg::to_canonical(*number, unit.empty() ? def.canonical_unit : unit, def);
}

}  // namespace

PatientResult evaluate_patient(const EligibilityProfile& profile, const PatientRecord& patient,
                               const KnowledgeBase& kb) {
  PatientResult result;
  bool any_violated = false, any_unknown = false;
  for (std::size_t i = 0; i < profile.facts.size(); ++i) {
    const auto& f = profile.facts[i];
    FactVerdict v{i, Verdict::indeterminate};
    auto it = patient.find(f.concept_ref);
    if (it != patient.end()) {
      bool holds = false;
      if (f.is_entity()) {
        const auto value = text::to_lower(text::trim(it->second));
        if (value != "present" && value != "absent")
          throw EvaluationError("fact on '" + f.concept_ref + "': expected present|absent, got '" + it->second + "'");
        holds = (value == "present") == f.entity().requires_presence;
      } else {
        const auto* def = kb.find_attribute(f.concept_ref);
        if (!def) throw EvaluationError("fact on '" + f.concept_ref + "': attribute not in the knowledge base");
        std::optional<double> measure;
        try {
          measure = parse_measure(it->second, *def);
        } catch (const EvaluationError& e) {
          throw EvaluationError("fact on '" + f.concept_ref + "': " + e.what());
        }
        if (!measure)
          throw EvaluationError("fact on '" + f.concept_ref + "': non-numeric value '" + it->second + "'");
        holds = f.attribute().satisfied_by(*measure);
      }
      // Facts still in exclusion form must not hold.
      if (f.form == BlockKind::exclusion) holds = !holds;
      v.verdict = holds ? Verdict::satisfied : Verdict::violated;
    }
    any_violated |= v.verdict == Verdict::violated;
    any_unknown |= v.verdict == Verdict::indeterminate;
    result.facts.push_back(v);
  }
  result.overall = any_violated ? Verdict::violated : any_unknown ? Verdict::indeterminate : Verdict::satisfied;
  return result;
}

}  // namespace critex
