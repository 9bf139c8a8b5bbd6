#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "critex/aggregator.hpp"
#include "critex/attribute_cfg.hpp"
#include "critex/entity_linker.hpp"
#include "critex/entity_tagger.hpp"
#include "critex/knowledge_base.hpp"
#include "critex/relation_extractor.hpp"

namespace critex {

struct TrialRecord {
  std::string nct_id;
  std::string title;
  std::string eligibility_text;
};

bool is_nct_id(std::string_view s);

struct IngestResult {
  std::vector<TrialRecord> records;
  std::size_t skipped = 0;
};

// Pipe-separated corpus with header `nct_id|title|eligibility_criteria`;
// `\n` inside the criteria field encodes a line break. Malformed rows are
// skipped with a warning; a missing header throws LoadError.
IngestResult parse_corpus(std::string_view content, std::string_view source = "<corpus>");
IngestResult ingest(const std::filesystem::path& path);

enum class TaggerMode { gazetteer, external, merged };
enum class LinkScope { trial, corpus };

std::string_view to_string(TaggerMode m);
std::string_view to_string(LinkScope s);

struct Config {
  std::filesystem::path concepts;
  std::filesystem::path attributes;
  std::filesystem::path grammar;
  std::filesystem::path negation_rules;
  std::filesystem::path intent_rules;
  std::optional<std::filesystem::path> embeddings;
  std::optional<std::filesystem::path> tags;
  TaggerMode tagger = TaggerMode::gazetteer;
  LinkScope link_scope = LinkScope::trial;
  LinkerConfig linker;
  std::size_t threads = 1;

  // Applies one `key=value` setting; relative paths resolve against base_dir.
  // Throws LoadError on unknown keys or malformed values.
  void set(std::string_view key, std::string_view value, const std::filesystem::path& base_dir = {});

  // Flat key=value file, `#` comments.
  static Config parse(std::string_view content, const std::filesystem::path& base_dir);
  static Config load(const std::filesystem::path& path);
  // Paths of the bundled data directory.
  static Config defaults(const std::filesystem::path& data_dir);

  nlohmann::json to_json() const;
};

// Read-only resources shared by all workers.
struct Resources {
  KnowledgeBase kb;
  cfg::Grammar grammar;
  std::unique_ptr<cfg::Lexicon> lexicon;
  std::unique_ptr<Gazetteer> gazetteer;
  std::vector<NegationRule> negation_rules;
  std::vector<IntentRule> intents;
  std::optional<EmbeddingTable> embeddings;

  // Any failure here is fatal for a run.
  static Resources load(const Config& config);
};

struct MentionRecord {
  EntityMention mention;
  std::optional<std::string> concept_id;
  double similarity = 0;
  Polarity polarity = Polarity::affirmed;
};

struct TrialOutput {
  std::string trial_id;
  EligibilityProfile profile;
  std::vector<MentionRecord> mentions;
  std::optional<std::string> error;  // per-trial failure, facts empty
};

// preprocess -> (tag, link, polarity) + CFG -> aggregate, per trial, in
// input order. Deterministic for fixed config and input.
std::vector<TrialOutput> run_extract(const std::vector<TrialRecord>& records, const Config& config,
                                     const Resources& resources);

// ---- JSONL serialization

nlohmann::json fact_to_json(const CriterionFact& fact, const KnowledgeBase& kb);
CriterionFact fact_from_json(const nlohmann::json& j);
nlohmann::json mention_to_json(const MentionRecord& m);

struct OutputOptions {
  bool mentions = false;  // emit {"record":"mention"} lines
  bool audit = false;     // emit {"record":"dropped"} lines
};

void write_output(std::ostream& out, const std::vector<TrialOutput>& trials, const Config& config,
                  const KnowledgeBase& kb, const OutputOptions& options = {});

struct Predictions {
  std::vector<std::string> trials;  // header order
  std::map<std::string, EligibilityProfile> profiles;
  std::map<std::string, std::vector<MentionRecord>> mentions;
  bool has_mention_records = false;
};

Predictions read_predictions(std::string_view jsonl, std::string_view source = "<predictions>");

PatientRecord parse_patient(const nlohmann::json& j);

// ---- metrics

struct EvalCounts {
  std::size_t true_positives = 0;
  std::size_t predicted = 0;
  std::size_t gold = 0;
};

struct PRF {
  std::optional<double> precision;  // nullopt: not applicable
  std::optional<double> recall;
  std::optional<double> f1;
};

PRF compute_prf(const EvalCounts& counts);

struct Ratio {
  std::size_t numerator = 0;
  std::size_t denominator = 0;
  std::optional<double> value() const {
    return denominator ? std::optional<double>(static_cast<double>(numerator) / static_cast<double>(denominator))
                       : std::nullopt;
  }
};

struct EvalReport {
  EvalCounts entity_recognition;
  PRF entity_recognition_prf;
  Ratio entity_linking;
  Ratio attribute_linking;
  Ratio relation_extraction;
  Ratio end_to_end;

  nlohmann::json to_json() const;
  std::string to_text() const;
};

struct EvalMismatchError : Error {
  using Error::Error;
};

// Gold JSONL: entity records {nct_id, line_index, span, category, concept_id,
// polarity, block} and attribute records {nct_id, attribute_id, lower, upper,
// outside?}. Throws EvalMismatchError when trial ids differ.
EvalReport run_eval(const Predictions& predicted, std::string_view gold_jsonl, const KnowledgeBase& kb,
                    const std::vector<IntentRule>& intents, std::string_view source = "<gold>");

std::string format_ratio(std::optional<double> v);

}  // namespace critex
