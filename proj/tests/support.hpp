#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "critex/pipeline.hpp"

namespace critex::testing {

inline std::filesystem::path data_dir() { return CRITEX_DATA_DIR; }
inline std::filesystem::path fixture_dir() { return CRITEX_FIXTURE_DIR; }

inline Config bundled_config() { return Config::load(data_dir() / "default.conf"); }

// Loaded once; read-only afterwards.
inline const Resources& bundled() {
  static const Resources r = Resources::load(bundled_config());
  return r;
}

inline Concept make_concept(std::string id, std::string name, EntityCategory cat,
                            std::optional<std::string> parent = std::nullopt, std::set<std::string> synonyms = {}) {
  return Concept{std::move(id), std::move(name), std::move(synonyms), cat, std::move(parent)};
}

inline AttributeDef make_attribute(std::string id, std::string name, std::string unit,
                                   std::map<std::string, double> units = {}, std::set<std::string> aliases = {}) {
  AttributeDef a;
  a.id = std::move(id);
  a.canonical_name = std::move(name);
  a.aliases = std::move(aliases);
  a.canonical_unit = std::move(unit);
  a.accepted_units = std::move(units);
  return a;
}

// Lines of the first block, joined as the tokenizer sees them.
inline std::vector<Token> tokens_of(std::string_view line) { return tokenize(line); }

}  // namespace critex::testing
