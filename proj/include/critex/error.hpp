#pragma once

#include <stdexcept>
#include <string>

namespace critex {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent resource file (knowledge base, grammar, rules,
// embeddings, tag files, corpora).
struct LoadError : Error {
  using Error::Error;
};

// Unknown identifier passed to a knowledge-base query.
struct LookupError : Error {
  using Error::Error;
};

// Semantic failure while turning a parse tree or patient record into values.
struct EvaluationError : Error {
  using Error::Error;
};

}  // namespace critex
