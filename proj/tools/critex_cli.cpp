// critex: extract eligibility profiles, score them, and screen patients.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "critex/error.hpp"
#include "critex/pipeline.hpp"

#ifndef CRITEX_DATA_DIR
#define CRITEX_DATA_DIR "data"
#endif

namespace {

using namespace critex;

Config load_config(const std::string& path) {
  if (path.empty()) return Config::defaults(CRITEX_DATA_DIR);
  return Config::load(path);
}

struct ExtractArgs {
  std::string config, input, output, tagger, tags, embeddings;
  std::optional<double> eps, theta;
  std::optional<std::size_t> min_points, threads;
  std::string link_scope;
  bool mentions = false, audit = false;
};

int run_extract_command(const ExtractArgs& a) {
  auto config = load_config(a.config);
  if (!a.tagger.empty()) config.set("tagger", a.tagger);
  if (!a.tags.empty()) config.set("tags", a.tags);
  if (!a.embeddings.empty()) config.set("embeddings", a.embeddings);
  if (!a.link_scope.empty()) config.set("link_scope", a.link_scope);
  if (a.eps) config.set("eps", std::to_string(*a.eps));
  if (a.theta) config.set("theta", std::to_string(*a.theta));
  if (a.min_points) config.set("min_points", std::to_string(*a.min_points));
  if (a.threads) config.set("threads", std::to_string(*a.threads));

  const auto resources = Resources::load(config);
  const auto corpus = ingest(a.input);
  spdlog::info("{} trials read, {} rows skipped", corpus.records.size(), corpus.skipped);
  const auto trials = run_extract(corpus.records, config, resources);

  OutputOptions options{a.mentions, a.audit};
  if (a.output.empty() || a.output == "-") {
    write_output(std::cout, trials, config, resources.kb, options);
  } else {
    std::ofstream out(a.output);
    if (!out) throw LoadError("cannot open '" + a.output + "' for writing");
    write_output(out, trials, config, resources.kb, options);
  }
  std::size_t failed = 0;
  for (const auto& t : trials) failed += t.error.has_value();
  if (failed) spdlog::warn("{} of {} trials failed", failed, trials.size());
  return 0;
}

int run_eval_command(const std::string& config_path, const std::string& predictions, const std::string& gold,
                     bool as_json) {
  const auto config = load_config(config_path);
  const auto kb = load_knowledge_base(config.concepts, config.attributes);
  const auto intents = load_intent_rules(config.intent_rules);
  const auto pred = read_predictions(read_file(predictions), predictions);
  const auto report = run_eval(pred, read_file(gold), kb, intents, gold);
  if (as_json)
    std::cout << report.to_json().dump(2) << '\n';
  else
    std::cout << report.to_text();
  return 0;
}

int run_patient_command(const std::string& config_path, const std::string& facts, const std::string& trial,
                        const std::string& patient_path) {
  const auto config = load_config(config_path);
  const auto kb = load_knowledge_base(config.concepts, config.attributes);
  const auto pred = read_predictions(read_file(facts), facts);
  const auto it = pred.profiles.find(trial);
  if (it == pred.profiles.end()) throw LookupError("trial '" + trial + "' not found in " + facts);
  nlohmann::json pj;
  try {
    pj = nlohmann::json::parse(read_file(patient_path));
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(patient_path + ": " + e.what());
  }
  const auto result = evaluate_patient(it->second, parse_patient(pj), kb);
  nlohmann::json out{{"trial_id", trial}, {"verdict", to_string(result.overall)}};
  auto& per_fact = out["facts"] = nlohmann::json::array();
  for (const auto& fv : result.facts) {
    const auto& f = it->second.facts[fv.fact_index];
    per_fact.push_back({{"concept_id", f.concept_ref}, {"verdict", to_string(fv.verdict)}});
  }
  std::cout << out.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Clinical trial eligibility criteria extraction"};
  app.set_version_flag("--version", "critex 0.1.0");
  app.require_subcommand(1);
  std::string log_level = "warn";
  app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off")->capture_default_str();

  ExtractArgs ex;
  auto* extract = app.add_subcommand("extract", "Extract eligibility profiles from a trial corpus");
  extract->add_option("--config", ex.config, "key=value config file (default: bundled data)");
  extract->add_option("--input", ex.input, "pipe-separated trial corpus")->required();
  extract->add_option("--output", ex.output, "JSONL output path (default: stdout)");
  extract->add_option("--tagger", ex.tagger, "gazetteer|external|merged");
  extract->add_option("--tags", ex.tags, "external tag JSONL");
  extract->add_option("--embeddings", ex.embeddings, "token embedding file");
  extract->add_option("--link-scope", ex.link_scope, "trial|corpus");
  extract->add_option("--eps", ex.eps, "DBSCAN radius (cosine distance)");
  extract->add_option("--min-points", ex.min_points, "DBSCAN minimum neighbourhood size");
  extract->add_option("--theta", ex.theta, "grounding similarity threshold");
  extract->add_option("--threads", ex.threads, "worker threads");
  extract->add_flag("--mentions", ex.mentions, "also write mention records");
  extract->add_flag("--audit", ex.audit, "also write dropped-fact records");

  std::string ev_config, ev_pred, ev_gold;
  bool ev_json = false;
  auto* eval = app.add_subcommand("eval", "Score predictions against gold annotations");
  eval->add_option("--config", ev_config, "key=value config file (default: bundled data)");
  eval->add_option("--predictions", ev_pred, "JSONL written by extract")->required();
  eval->add_option("--gold", ev_gold, "gold annotation JSONL")->required();
  eval->add_flag("--json", ev_json, "print the report as JSON");

  std::string pt_config, pt_facts, pt_trial, pt_patient;
  auto* patient = app.add_subcommand("evaluate-patient", "Screen one patient against one trial profile");
  patient->add_option("--config", pt_config, "key=value config file (default: bundled data)");
  patient->add_option("--facts", pt_facts, "JSONL written by extract")->required();
  patient->add_option("--trial", pt_trial, "trial id")->required();
  patient->add_option("--patient", pt_patient, "patient JSON object")->required();

  CLI11_PARSE(app, argc, argv);
  spdlog::set_default_logger(spdlog::stderr_color_mt("critex"));
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*extract) return run_extract_command(ex);
    if (*eval) return run_eval_command(ev_config, ev_pred, ev_gold, ev_json);
    if (*patient) return run_patient_command(pt_config, pt_facts, pt_trial, pt_patient);
  } catch (const EvalMismatchError& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 1;
}
