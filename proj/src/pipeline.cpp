#include "critex/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>
#include <regex>
#include <set>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "critex/error.hpp"
#include "critex/text.hpp"

namespace critex {

using nlohmann::json;

// ---------------------------------------------------------------- ingestion

bool is_nct_id(std::string_view s) {
  if (s.size() != 11 || s.substr(0, 3) != "NCT") return false;
  return std::all_of(s.begin() + 3, s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

namespace {

std::string unescape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && i + 1 < s.size()) {
      const char n = s[i + 1];
      if (n == 'n') { out += '\n'; ++i; continue; }
      if (n == 't') { out += '\t'; ++i; continue; }
      if (n == '\\') { out += '\\'; ++i; continue; }
    }
    out += s[i];
  }
  return out;
}

}  // namespace

IngestResult parse_corpus(std::string_view content, std::string_view source) {
  IngestResult result;
  bool header = false;
  std::size_t number = 0;
  for (auto& raw : text::split(content, '\n')) {
    ++number;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (text::trim(raw).empty()) continue;
    if (!header) {
      if (text::to_lower(text::trim(raw)) != "nct_id|title|eligibility_criteria")
        throw LoadError(std::string(source) + ": missing header 'nct_id|title|eligibility_criteria'");
      header = true;
      continue;
    }
    const auto first = raw.find('|');
    const auto second = first == std::string::npos ? std::string::npos : raw.find('|', first + 1);
    if (second == std::string::npos) {
      spdlog::warn("{}:{}: expected 3 pipe-separated fields; row skipped", source, number);
      ++result.skipped;
      continue;
    }
    TrialRecord rec;
    rec.nct_id = std::string(text::trim(std::string_view(raw).substr(0, first)));
    rec.title = std::string(text::trim(std::string_view(raw).substr(first + 1, second - first - 1)));
    rec.eligibility_text = unescape(std::string_view(raw).substr(second + 1));
    if (!is_nct_id(rec.nct_id)) {
      spdlog::warn("{}:{}: malformed trial id '{}'; row skipped", source, number, rec.nct_id);
      ++result.skipped;
      continue;
    }
    result.records.push_back(std::move(rec));
  }
  if (!header) throw LoadError(std::string(source) + ": missing header 'nct_id|title|eligibility_criteria'");
  return result;
}

IngestResult ingest(const std::filesystem::path& path) { return parse_corpus(read_file(path), path.string()); }

// ---------------------------------------------------------------- config

std::string_view to_string(TaggerMode m) {
  switch (m) {
    case TaggerMode::gazetteer: return "gazetteer";
    case TaggerMode::external: return "external";
    case TaggerMode::merged: return "merged";
  }
  return "unknown";
}

std::string_view to_string(LinkScope s) { return s == LinkScope::trial ? "trial" : "corpus"; }

void Config::set(std::string_view key, std::string_view value, const std::filesystem::path& base_dir) {
  const auto k = std::string(text::trim(key));
  const auto v = std::string(text::trim(value));
  const auto path = [&]() -> std::filesystem::path {
    std::filesystem::path p(v);
    return p.is_relative() && !base_dir.empty() ? base_dir / p : p;
  };
  const auto number = [&]() {
    auto d = text::parse_double(v);
    if (!d) throw LoadError("config '" + k + "': expected a number, got '" + v + "'");
    return *d;
  };
  if (k == "concepts") concepts = path();
  else if (k == "attributes") attributes = path();
  else if (k == "grammar") grammar = path();
  else if (k == "negation_rules") negation_rules = path();
  else if (k == "intent_rules") intent_rules = path();
  else if (k == "embeddings") embeddings = v.empty() ? std::nullopt : std::optional(path());
  else if (k == "tags") tags = v.empty() ? std::nullopt : std::optional(path());
  else if (k == "tagger") {
    if (v == "gazetteer") tagger = TaggerMode::gazetteer;
    else if (v == "external") tagger = TaggerMode::external;
    else if (v == "merged") tagger = TaggerMode::merged;
    else throw LoadError("config 'tagger': expected gazetteer|external|merged, got '" + v + "'");
  } else if (k == "link_scope") {
    if (v == "trial") link_scope = LinkScope::trial;
    else if (v == "corpus") link_scope = LinkScope::corpus;
    else throw LoadError("config 'link_scope': expected trial|corpus, got '" + v + "'");
  } else if (k == "eps") {
    linker.eps = number();
    if (!(linker.eps > 0)) throw LoadError("config 'eps' must be > 0");
  } else if (k == "min_points") {
    const auto d = number();
    if (d < 1 || d != std::floor(d)) throw LoadError("config 'min_points' must be an integer >= 1");
    linker.min_points = static_cast<std::size_t>(d);
  } else if (k == "theta") {
    linker.theta = number();
    if (linker.theta < 0 || linker.theta > 1) throw LoadError("config 'theta' must lie in [0, 1]");
  } else if (k == "threads") {
    const auto d = number();
    if (d < 1 || d != std::floor(d)) throw LoadError("config 'threads' must be an integer >= 1");
    threads = static_cast<std::size_t>(d);
  } else {
    throw LoadError("unknown config key '" + k + "'");
  }
}

Config Config::parse(std::string_view content, const std::filesystem::path& base_dir) {
  Config c;
  std::size_t number = 0;
  for (const auto& raw : text::split(content, '\n')) {
    ++number;
    auto line = text::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos) throw LoadError("config line " + std::to_string(number) + ": expected key=value");
    c.set(line.substr(0, eq), line.substr(eq + 1), base_dir);
  }
  return c;
}

Config Config::load(const std::filesystem::path& path) {
  return parse(read_file(path), path.has_parent_path() ? path.parent_path() : std::filesystem::path("."));
}

Config Config::defaults(const std::filesystem::path& data_dir) {
  Config c;
  c.concepts = data_dir / "concepts.tsv";
  c.attributes = data_dir / "attributes.tsv";
  c.grammar = data_dir / "grammar.cfg";
  c.negation_rules = data_dir / "negation_rules.tsv";
  c.intent_rules = data_dir / "intent_rules.tsv";
  return c;
}

json Config::to_json() const {
  const auto opt = [](const std::optional<std::filesystem::path>& p) { return p ? json(p->string()) : json(nullptr); };
  return json{{"concepts", concepts.string()},
              {"attributes", attributes.string()},
              {"grammar", grammar.string()},
              {"negation_rules", negation_rules.string()},
              {"intent_rules", intent_rules.string()},
              {"embeddings", opt(embeddings)},
              {"tags", opt(tags)},
              {"tagger", to_string(tagger)},
              {"link_scope", to_string(link_scope)},
              {"eps", linker.eps},
              {"min_points", linker.min_points},
              {"theta", linker.theta}};
}

Resources Resources::load(const Config& config) {
  Resources r;
  r.kb = load_knowledge_base(config.concepts, config.attributes);
  r.grammar = cfg::Grammar::load(config.grammar);
  r.lexicon = std::make_unique<cfg::Lexicon>(r.kb);
  r.gazetteer = std::make_unique<Gazetteer>(r.kb);
  r.negation_rules = load_negation_rules(config.negation_rules);
  r.intents = load_intent_rules(config.intent_rules);
  for (const auto& rule : r.intents)
    for (const auto& id : {rule.winner, rule.loser})
      if (!r.kb.find_concept(id)) throw LoadError("intent rule references unknown concept '" + id + "'");
  if (config.embeddings) r.embeddings = load_embeddings(*config.embeddings);
  if (config.tagger != TaggerMode::gazetteer && !config.tags)
    throw LoadError("tagger mode '" + std::string(to_string(config.tagger)) + "' requires a tag file");
  return r;
}

// ---------------------------------------------------------------- extraction

namespace {

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (auto i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  for (auto& th : pool) th.join();
}

struct TrialWork {
  const TrialRecord* record = nullptr;
  std::vector<CriteriaBlock> blocks;
  std::vector<IndexedLine> lines;
  std::vector<EntityMention> mentions;
  std::vector<CriterionFact> attribute_facts;
  std::vector<DroppedFact> contradictions;
  std::vector<Grounding> groundings;
  std::optional<std::string> error;
};

Provenance line_provenance(const IndexedLine& line, std::size_t first, std::size_t last) {
  Provenance p;
  p.block = line.block;
  p.line_index = line.line_index;
  p.text = line.line->text;
  p.first_token = first;
  p.last_token = last;
  p.surface = span_surface(line.line->text, line.line->tokens, first, last);
  return p;
}

}  // namespace

std::vector<TrialOutput> run_extract(const std::vector<TrialRecord>& records, const Config& config,
                                     const Resources& res) {
  std::vector<TrialWork> work(records.size());
  for (std::size_t t = 0; t < records.size(); ++t) {
    work[t].record = &records[t];
    try {
      work[t].blocks = segment_blocks(records[t].eligibility_text);
      work[t].lines = index_lines(work[t].blocks);
    } catch (const std::exception& e) {
      work[t].error = e.what();
    }
  }

  std::map<std::pair<std::string, std::size_t>, std::vector<EntityMention>> external;
  if (config.tagger != TaggerMode::gazetteer) {
    CorpusIndex corpus;
    for (const auto& w : work)
      for (const auto& l : w.lines) corpus[{w.record->nct_id, l.line_index}] = CorpusLine{l.block, l.line};
    for (auto& m : ingest_external_tags(*config.tags, corpus)) {
      auto key = std::make_pair(m.trial_id, m.line_index);
      external[key].push_back(std::move(m));
    }
  }

  // Tagging and attribute extraction.
  parallel_for(work.size(), config.threads, [&](std::size_t t) {
    auto& w = work[t];
    if (w.error) return;
    try {
      const auto& id = w.record->nct_id;
      for (const auto& l : w.lines) {
        std::vector<EntityMention> gaz, ext;
        if (config.tagger != TaggerMode::external)
          gaz = res.gazetteer->tag(l.line->text, l.line->tokens, id, l.block, l.line_index);
        if (config.tagger != TaggerMode::gazetteer)
          if (auto it = external.find({id, l.line_index}); it != external.end()) ext = it->second;
        auto mentions = config.tagger == TaggerMode::merged ? merge_mentions(gaz, ext)
                        : config.tagger == TaggerMode::gazetteer ? gaz
                                                                 : merge_mentions(ext, {});
        w.mentions.insert(w.mentions.end(), mentions.begin(), mentions.end());

        auto attrs = cfg::extract_attributes(l.line->tokens, *res.lexicon, res.grammar, res.kb);
        for (auto& c : attrs.criteria) {
          CriterionFact f;
          f.trial_id = id;
          f.concept_ref = c.criterion.attribute_id;
          f.form = l.block;
          f.provenance.push_back(line_provenance(l, c.first_token, c.last_token));
          f.constraint = std::move(c.criterion);
          w.attribute_facts.push_back(std::move(f));
        }
        for (auto& e : attrs.contradictions) {
          CriterionFact f;
          f.trial_id = id;
          f.concept_ref = e.criterion.attribute_id;
          f.form = l.block;
          f.provenance.push_back(line_provenance(l, 0, l.line->tokens.empty() ? 0 : l.line->tokens.size() - 1));
          f.constraint = e.criterion;
          w.contradictions.push_back(DroppedFact{std::move(f), DropReason::contradiction});
        }
        for (const auto& warning : attrs.warnings) spdlog::warn("{} line {}: {}", id, l.line_index, warning);
      }
    } catch (const std::exception& e) {
      w.error = e.what();
    }
  });

  // Linking.
  const EmbeddingTable* table = res.embeddings ? &*res.embeddings : nullptr;
  if (config.link_scope == LinkScope::trial) {
    parallel_for(work.size(), config.threads, [&](std::size_t t) {
      auto& w = work[t];
      if (w.error) return;
      try {
        w.groundings = link_mentions(w.mentions, table, res.kb, config.linker);
      } catch (const std::exception& e) {
        w.error = e.what();
      }
    });
  } else {
    std::vector<EntityMention> all;
    std::vector<std::pair<std::size_t, std::size_t>> owner;
    for (std::size_t t = 0; t < work.size(); ++t) {
      if (work[t].error) continue;
      for (std::size_t k = 0; k < work[t].mentions.size(); ++k) {
        all.push_back(work[t].mentions[k]);
        owner.emplace_back(t, k);
      }
      work[t].groundings.resize(work[t].mentions.size());
    }
    auto groundings = link_mentions(all, table, res.kb, config.linker);
    for (std::size_t i = 0; i < groundings.size(); ++i) {
      auto g = groundings[i];
      g.mention_index = owner[i].second;
      work[owner[i].first].groundings[owner[i].second] = std::move(g);
    }
  }

  // Polarity, facts, aggregation.
  std::vector<TrialOutput> out(work.size());
  parallel_for(work.size(), config.threads, [&](std::size_t t) {
    auto& w = work[t];
    auto& o = out[t];
    o.trial_id = w.record->nct_id;
    o.profile.trial_id = o.trial_id;
    if (w.error) {
      o.error = w.error;
      return;
    }
    try {
      std::map<std::size_t, const IndexedLine*> by_index;
      for (const auto& l : w.lines) by_index[l.line_index] = &l;
      std::vector<CriterionFact> facts;
      for (std::size_t k = 0; k < w.mentions.size(); ++k) {
        const auto& m = w.mentions[k];
        const auto& line = *by_index.at(m.line_index);
        MentionRecord rec{m, w.groundings[k].concept_id, w.groundings[k].similarity,
                          detect_negation(line.line->tokens, m, res.negation_rules)};
        if (rec.concept_id) {
          CriterionFact f;
          f.trial_id = o.trial_id;
          f.concept_ref = *rec.concept_id;
          f.constraint = EntityConstraint{rec.polarity == Polarity::affirmed};
          f.form = m.block_kind;
          auto p = line_provenance(line, m.first_token, m.last_token);
          p.category = m.category;
          p.polarity = rec.polarity;
          f.provenance.push_back(std::move(p));
          facts.push_back(std::move(f));
        }
        o.mentions.push_back(std::move(rec));
      }
      facts.insert(facts.end(), w.attribute_facts.begin(), w.attribute_facts.end());
      o.profile = aggregate(facts, res.kb, res.intents);
      o.profile.trial_id = o.trial_id;
      o.profile.dropped.insert(o.profile.dropped.end(), w.contradictions.begin(), w.contradictions.end());
    } catch (const std::exception& e) {
      o.error = e.what();
      o.profile = EligibilityProfile{o.trial_id, {}, {}};
      o.mentions.clear();
    }
    if (o.error) spdlog::error("trial {} failed: {}", o.trial_id, *o.error);
  });
  for (const auto& o : out)
    if (o.error) spdlog::error("trial {} failed: {}", o.trial_id, *o.error);
  return out;
}

// ---------------------------------------------------------------- JSON

namespace {

json bound_to_json(const std::optional<cfg::Bound>& b) {
  if (!b) return nullptr;
  return json{{"value", b->value}, {"inclusive", b->inclusive}};
}

std::optional<cfg::Bound> bound_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  if (j.is_number()) return cfg::Bound{j.get<double>(), true};
  return cfg::Bound{j.at("value").get<double>(), j.value("inclusive", true)};
}

json provenance_to_json(const Provenance& p, bool entity) {
  json j{{"block", to_string(p.block)}, {"line_index", p.line_index}, {"text", p.text},
         {"span", {p.first_token, p.last_token}}, {"surface", p.surface}};
  if (entity) {
    j["category"] = p.category ? json(to_string(*p.category)) : json(nullptr);
    j["polarity"] = p.polarity ? json(to_string(*p.polarity)) : json(nullptr);
  }
  return j;
}

Provenance provenance_from_json(const json& j) {
  Provenance p;
  p.block = parse_block_kind(j.at("block").get<std::string>());
  p.line_index = j.at("line_index").get<std::size_t>();
  p.text = j.value("text", "");
  if (j.contains("span")) {
    p.first_token = j["span"].at(0).get<std::size_t>();
    p.last_token = j["span"].at(1).get<std::size_t>();
  }
  p.surface = j.value("surface", "");
  if (j.contains("category") && !j["category"].is_null()) p.category = parse_category(j["category"].get<std::string>());
  if (j.contains("polarity") && !j["polarity"].is_null()) p.polarity = parse_polarity(j["polarity"].get<std::string>());
  return p;
}

}  // namespace

json fact_to_json(const CriterionFact& fact, const KnowledgeBase& kb) {
  json j;
  j["trial_id"] = fact.trial_id;
  j["concept_id"] = fact.concept_ref;
  j["concept_name"] = kb.display_name(fact.concept_ref);
  j["kind"] = fact.is_entity() ? "entity" : "attribute";
  if (fact.is_entity()) {
    j["constraint"] = json{{"requires_presence", fact.entity().requires_presence}};
  } else {
    const auto& a = fact.attribute();
    json c{{"lower", bound_to_json(a.lower)}, {"upper", bound_to_json(a.upper)}, {"unit", a.unit}, {"outside", a.negated}};
    if (a.negated) {
      // Outside an interval: below the lower end or above the upper end.
      c["alternatives"] = json::array({json{{"upper", bound_to_json(cfg::Bound{a.lower->value, !a.lower->inclusive})}},
                                       json{{"lower", bound_to_json(cfg::Bound{a.upper->value, !a.upper->inclusive})}}});
    }
    j["constraint"] = std::move(c);
  }
  if (fact.form == BlockKind::exclusion) j["form"] = "exclusion";
  json prov = json::array();
  for (const auto& p : fact.provenance) prov.push_back(provenance_to_json(p, fact.is_entity()));
  j["provenance"] = std::move(prov);
  return j;
}

CriterionFact fact_from_json(const json& j) {
  CriterionFact f;
  f.trial_id = j.at("trial_id").get<std::string>();
  f.concept_ref = j.at("concept_id").get<std::string>();
  const auto kind = j.at("kind").get<std::string>();
  const auto& c = j.at("constraint");
  if (kind == "entity") {
    f.constraint = EntityConstraint{c.at("requires_presence").get<bool>()};
  } else if (kind == "attribute") {
    cfg::AttributeCriterion a;
    a.attribute_id = f.concept_ref;
    a.lower = bound_from_json(c.value("lower", json(nullptr)));
    a.upper = bound_from_json(c.value("upper", json(nullptr)));
    a.unit = c.value("unit", "");
    a.negated = c.value("outside", false);
    f.constraint = std::move(a);
  } else {
    throw LoadError("unknown fact kind '" + kind + "'");
  }
  if (j.contains("form")) f.form = parse_block_kind(j["form"].get<std::string>());
  if (j.contains("provenance"))
    for (const auto& p : j["provenance"]) f.provenance.push_back(provenance_from_json(p));
  return f;
}

json mention_to_json(const MentionRecord& m) {
  return json{{"record", "mention"},
              {"trial_id", m.mention.trial_id},
              {"block", to_string(m.mention.block_kind)},
              {"line_index", m.mention.line_index},
              {"span", {m.mention.first_token, m.mention.last_token}},
              {"surface", m.mention.surface},
              {"category", to_string(m.mention.category)},
              {"score", m.mention.score},
              {"concept_id", m.concept_id ? json(*m.concept_id) : json(nullptr)},
              {"similarity", m.similarity},
              {"polarity", to_string(m.polarity)}};
}

void write_output(std::ostream& out, const std::vector<TrialOutput>& trials, const Config& config,
                  const KnowledgeBase& kb, const OutputOptions& options) {
  json header{{"config", config.to_json()}};
  json ids = json::array();
  for (const auto& t : trials) ids.push_back(t.trial_id);
  header["trials"] = std::move(ids);
  json failed = json::array();
  for (const auto& t : trials)
    if (t.error) failed.push_back(json{{"trial_id", t.trial_id}, {"error", *t.error}});
  header["failed"] = std::move(failed);
  out << header.dump() << '\n';
  for (const auto& t : trials) {
    for (const auto& f : t.profile.facts) out << fact_to_json(f, kb).dump() << '\n';
    if (options.mentions)
      for (const auto& m : t.mentions) out << mention_to_json(m).dump() << '\n';
    if (options.audit)
      for (const auto& d : t.profile.dropped) {
        auto j = fact_to_json(d.fact, kb);
        j["record"] = "dropped";
        j["reason"] = to_string(d.reason);
        out << j.dump() << '\n';
      }
  }
}

Predictions read_predictions(std::string_view jsonl, std::string_view source) {
  Predictions p;
  std::size_t number = 0;
  bool header = false;
  for (const auto& raw : text::split(jsonl, '\n')) {
    ++number;
    if (text::trim(raw).empty()) continue;
    const auto where = std::string(source) + ":" + std::to_string(number);
    try {
      const auto j = json::parse(raw);
      if (j.contains("config")) {
        header = true;
        for (const auto& id : j.at("trials")) {
          p.trials.push_back(id.get<std::string>());
          p.profiles[id.get<std::string>()].trial_id = id.get<std::string>();
        }
        continue;
      }
      const auto record = j.value("record", "");
      if (record == "mention") {
        p.has_mention_records = true;
        MentionRecord m;
        m.mention.trial_id = j.at("trial_id").get<std::string>();
        m.mention.block_kind = parse_block_kind(j.at("block").get<std::string>());
        m.mention.line_index = j.at("line_index").get<std::size_t>();
        m.mention.first_token = j.at("span").at(0).get<std::size_t>();
        m.mention.last_token = j.at("span").at(1).get<std::size_t>();
        m.mention.surface = j.value("surface", "");
        m.mention.category = parse_category(j.at("category").get<std::string>());
        m.mention.score = j.value("score", 1.0);
        if (!j.at("concept_id").is_null()) m.concept_id = j["concept_id"].get<std::string>();
        m.similarity = j.value("similarity", 0.0);
        m.polarity = parse_polarity(j.at("polarity").get<std::string>());
        p.mentions[m.mention.trial_id].push_back(std::move(m));
      } else if (record == "dropped") {
        auto f = fact_from_json(j);
        auto trial = f.trial_id;
        p.profiles[trial].dropped.push_back(DroppedFact{std::move(f), parse_drop_reason(j.at("reason").get<std::string>())});
      } else {
        auto f = fact_from_json(j);
        auto trial = f.trial_id;
        auto& profile = p.profiles[trial];
        profile.trial_id = trial;
        profile.facts.push_back(std::move(f));
      }
    } catch (const json::exception& e) {
      throw LoadError(where + ": " + e.what());
    } catch (const LoadError& e) {
      throw LoadError(where + ": " + e.what());
    }
  }
  if (!header) throw LoadError(std::string(source) + ": missing header line");
  return p;
}

PatientRecord parse_patient(const json& j) {
  if (!j.is_object()) throw LoadError("patient record must be a JSON object");
  PatientRecord out;
  for (const auto& [key, value] : j.items()) {
    if (value.is_string()) out[key] = value.get<std::string>();
    else if (value.is_number()) out[key] = text::format_double(value.get<double>());
    else if (value.is_boolean()) out[key] = value.get<bool>() ? "present" : "absent";
    else throw LoadError("patient value for '" + key + "' must be a string, number, or boolean");
  }
  return out;
}

// ---------------------------------------------------------------- metrics

PRF compute_prf(const EvalCounts& c) {
  PRF r;
  if (c.predicted > 0) r.precision = static_cast<double>(c.true_positives) / static_cast<double>(c.predicted);
  if (c.gold > 0) r.recall = static_cast<double>(c.true_positives) / static_cast<double>(c.gold);
  if (r.precision && r.recall) {
    const double s = *r.precision + *r.recall;
    r.f1 = s == 0 ? 0.0 : 2 * *r.precision * *r.recall / s;
  }
  return r;
}

std::string format_ratio(std::optional<double> v) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", *v);
  return buf;
}

json EvalReport::to_json() const {
  const auto opt = [](std::optional<double> v) { return v ? json(*v) : json(nullptr); };
  const auto ratio = [&](const Ratio& r) {
    return json{{"correct", r.numerator}, {"total", r.denominator}, {"accuracy", opt(r.value())}};
  };
  return json{
      {"matching",
       {{"entity_recognition", "exact (trial, line, token span, category) match"},
        {"entity_linking", "recognized mentions with the gold concept id / predicted mentions"},
        {"relation_extraction", "recognized mentions with the gold polarity / recognized mentions"},
        {"attribute_linking", "gold attribute criteria with a predicted fact on the same attribute / gold"},
        {"end_to_end", "exact profile-fact matches / (gold + predicted - matches)"}}},
      {"entity_recognition",
       {{"true_positives", entity_recognition.true_positives},
        {"predicted", entity_recognition.predicted},
        {"gold", entity_recognition.gold},
        {"precision", opt(entity_recognition_prf.precision)},
        {"recall", opt(entity_recognition_prf.recall)},
        {"f1", opt(entity_recognition_prf.f1)}}},
      {"entity_linking", ratio(entity_linking)},
      {"attribute_linking", ratio(attribute_linking)},
      {"relation_extraction", ratio(relation_extraction)},
      {"end_to_end", ratio(end_to_end)}};
}

std::string EvalReport::to_text() const {
  std::ostringstream s;
  const auto& er = entity_recognition;
  s << "# matching: NER exact span+category; NEL correct/predicted mentions; RE correct/recognized;\n"
    << "#           attribute linking by attribute id; end-to-end exact fact / (gold + predicted - matched)\n";
  s << "entity_recognition  P " << format_ratio(entity_recognition_prf.precision) << " (" << er.true_positives << "/"
    << er.predicted << ")  R " << format_ratio(entity_recognition_prf.recall) << " (" << er.true_positives << "/"
    << er.gold << ")  F1 " << format_ratio(entity_recognition_prf.f1) << '\n';
  const auto row = [&](const char* name, const Ratio& r) {
    s << name << format_ratio(r.value()) << " (" << r.numerator << "/" << r.denominator << ")\n";
  };
  row("entity_linking      ", entity_linking);
  row("attribute_linking   ", attribute_linking);
  row("relation_extraction ", relation_extraction);
  row("end_to_end          ", end_to_end);
  return s.str();
}

namespace {

struct GoldEntity {
  std::string trial;
  std::size_t line_index;
  std::size_t first, last;
  EntityCategory category;
  std::optional<std::string> concept_id;
  Polarity polarity;
  BlockKind block;
};

bool close(double a, double b) { return std::fabs(a - b) <= 1e-9 * std::max({1.0, std::fabs(a), std::fabs(b)}); }

bool same_bound(const std::optional<cfg::Bound>& a, const std::optional<cfg::Bound>& b) {
  if (a.has_value() != b.has_value()) return false;
  return !a || (a->inclusive == b->inclusive && close(a->value, b->value));
}

bool same_fact(const CriterionFact& a, const CriterionFact& b) {
  if (a.trial_id != b.trial_id || a.concept_ref != b.concept_ref || a.is_entity() != b.is_entity() || a.form != b.form)
    return false;
  if (a.is_entity()) return a.entity() == b.entity();
  const auto &x = a.attribute(), &y = b.attribute();
  return x.negated == y.negated && same_bound(x.lower, y.lower) && same_bound(x.upper, y.upper);
}

}  // namespace

EvalReport run_eval(const Predictions& predicted, std::string_view gold_jsonl, const KnowledgeBase& kb,
                    const std::vector<IntentRule>& intents, std::string_view source) {
  std::vector<GoldEntity> gold_entities;
  std::map<std::string, std::vector<CriterionFact>> gold_facts;
  std::set<std::string> gold_trials;
  std::size_t number = 0;
  for (const auto& raw : text::split(gold_jsonl, '\n')) {
    ++number;
    if (text::trim(raw).empty()) continue;
    const auto where = std::string(source) + ":" + std::to_string(number);
    try {
      const auto j = json::parse(raw);
      const auto trial = j.at("nct_id").get<std::string>();
      gold_trials.insert(trial);
      if (j.contains("attribute_id")) {
        cfg::AttributeCriterion a;
        a.attribute_id = j["attribute_id"].get<std::string>();
        a.lower = bound_from_json(j.value("lower", json(nullptr)));
        a.upper = bound_from_json(j.value("upper", json(nullptr)));
        a.negated = j.value("outside", false);
        if (const auto* def = kb.find_attribute(a.attribute_id)) a.unit = def->canonical_unit;
        gold_facts[trial].push_back(CriterionFact{trial, a.attribute_id, a, BlockKind::inclusion, {}});
      } else if (j.contains("category")) {
        GoldEntity g{trial,
                     j.at("line_index").get<std::size_t>(),
                     j.at("span").at(0).get<std::size_t>(),
                     j.at("span").at(1).get<std::size_t>(),
                     parse_category(j.at("category").get<std::string>()),
                     j.contains("concept_id") && !j["concept_id"].is_null()
                         ? std::optional<std::string>(j["concept_id"].get<std::string>())
                         : std::nullopt,
                     parse_polarity(j.at("polarity").get<std::string>()),
                     parse_block_kind(j.value("block", "inclusion"))};
        if (g.concept_id)
          gold_facts[trial].push_back(CriterionFact{trial, *g.concept_id,
                                                    EntityConstraint{g.polarity == Polarity::affirmed}, g.block, {}});
        gold_entities.push_back(std::move(g));
      } else {
        throw LoadError("record is neither an entity nor an attribute annotation");
      }
    } catch (const json::exception& e) {
      throw LoadError(where + ": " + e.what());
    } catch (const LoadError& e) {
      throw LoadError(where + ": " + e.what());
    }
  }

  const std::set<std::string> predicted_trials(predicted.trials.begin(), predicted.trials.end());
  std::vector<std::string> unmatched;
  for (const auto& t : gold_trials)
    if (!predicted_trials.count(t)) unmatched.push_back(t + " (gold only)");
  for (const auto& t : predicted_trials)
    if (!gold_trials.count(t)) unmatched.push_back(t + " (predictions only)");
  if (!unmatched.empty()) throw EvalMismatchError("trial ids differ between gold and predictions: " + text::join(unmatched, ", "));

  // Predicted mentions: explicit records, else fact provenance.
  std::vector<MentionRecord> mentions;
  if (predicted.has_mention_records) {
    for (const auto& [trial, ms] : predicted.mentions) mentions.insert(mentions.end(), ms.begin(), ms.end());
  } else {
    for (const auto& [trial, profile] : predicted.profiles) {
      std::vector<CriterionFact> all = profile.facts;
      for (const auto& d : profile.dropped) all.push_back(d.fact);
      std::set<std::tuple<std::size_t, std::size_t, std::size_t>> seen;
      for (const auto& f : all) {
        if (!f.is_entity()) continue;
        for (const auto& p : f.provenance) {
          if (!p.category || !seen.insert({p.line_index, p.first_token, p.last_token}).second) continue;
          MentionRecord m;
          m.mention = EntityMention{trial, p.block, p.line_index, p.first_token, p.last_token, p.surface, *p.category, 1.0};
          m.concept_id = f.concept_ref;
          m.polarity = p.polarity.value_or(Polarity::affirmed);
          mentions.push_back(std::move(m));
        }
      }
    }
  }

  EvalReport report;
  report.entity_recognition.predicted = mentions.size();
  report.entity_recognition.gold = gold_entities.size();
  std::vector<bool> gold_used(gold_entities.size(), false);
  for (const auto& m : mentions) {
    for (std::size_t g = 0; g < gold_entities.size(); ++g) {
      const auto& ge = gold_entities[g];
      if (gold_used[g] || ge.trial != m.mention.trial_id || ge.line_index != m.mention.line_index ||
          ge.first != m.mention.first_token || ge.last != m.mention.last_token || ge.category != m.mention.category)
        continue;
      gold_used[g] = true;
      ++report.entity_recognition.true_positives;
      if (ge.concept_id && m.concept_id == ge.concept_id) ++report.entity_linking.numerator;
      if (ge.polarity == m.polarity) ++report.relation_extraction.numerator;
      break;
    }
  }
  report.entity_recognition_prf = compute_prf(report.entity_recognition);
  report.entity_linking.denominator = mentions.size();
  report.relation_extraction.denominator = report.entity_recognition.true_positives;

  for (const auto& trial : gold_trials) {
    auto gold_profile = aggregate(gold_facts[trial], kb, intents);
    const auto it = predicted.profiles.find(trial);
    const std::vector<CriterionFact> empty;
    const auto& pred = it == predicted.profiles.end() ? empty : it->second.facts;

    // Attribute linking against the raw gold attribute records.
    std::vector<bool> pred_used(pred.size(), false);
    for (const auto& g : gold_facts[trial]) {
      if (g.is_entity()) continue;
      ++report.attribute_linking.denominator;
      for (std::size_t k = 0; k < pred.size(); ++k)
        if (!pred_used[k] && !pred[k].is_entity() && pred[k].concept_ref == g.concept_ref) {
          pred_used[k] = true;
          ++report.attribute_linking.numerator;
          break;
        }
    }

    std::vector<bool> matched(pred.size(), false);
    std::size_t hits = 0;
    for (const auto& g : gold_profile.facts)
      for (std::size_t k = 0; k < pred.size(); ++k)
        if (!matched[k] && same_fact(g, pred[k])) {
          matched[k] = true;
          ++hits;
          break;
        }
    report.end_to_end.numerator += hits;
    report.end_to_end.denominator += gold_profile.facts.size() + pred.size() - hits;
  }
  return report;
}

}  // namespace critex
