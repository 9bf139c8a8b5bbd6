#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "critex/entity_tagger.hpp"
#include "critex/knowledge_base.hpp"

namespace critex {

class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(std::size_t dimension) : dimension_(dimension) {}

  std::size_t dimension() const { return dimension_; }
  std::size_t size() const { return vectors_.size(); }
  const std::vector<float>* find(std::string_view token) const;
  // Replaces an existing entry. Throws LoadError on dimension mismatch or
  // non-finite components.
  void insert(std::string token, std::vector<float> vector);

 private:
  std::size_t dimension_ = 0;
  std::unordered_map<std::string, std::vector<float>> vectors_;
};

// Text vector format: "<count> <dimension>" header, then "token v1 ... vd".
EmbeddingTable parse_embeddings(std::string_view content, std::string_view source = "<embeddings>");
EmbeddingTable load_embeddings(const std::filesystem::path& path);

struct MentionVector {
  std::vector<double> vector;  // empty when ungroundable
  double in_vocab_fraction = 0;
  bool groundable() const { return in_vocab_fraction > 0; }
};

// Mean of the in-vocabulary delexicalized token vectors of the mention.
MentionVector embed_mention(const EntityMention& mention, const EmbeddingTable& table);

double cosine_distance(const std::vector<double>& a, const std::vector<double>& b);

// DBSCAN over points in the given order with cosine distance. Returns one
// label per point: cluster number (0, 1, ... in discovery order) or -1 for
// noise. Zero-norm points are noise and never neighbours.
std::vector<int> dbscan(const std::vector<std::vector<double>>& points, double eps, std::size_t min_points);

struct Cluster {
  std::vector<std::size_t> member_indices;  // indices into the caller's list
  std::optional<int> label;                 // nullopt: noise
};

// Sorts by (trial, block, line, span start) before clustering so the result
// is independent of input order. Ungroundable vectors are reported as noise.
std::vector<Cluster> cluster_mentions(const std::vector<EntityMention>& mentions,
                                      const std::vector<MentionVector>& vectors, double eps, std::size_t min_points);

// Sørensen-Dice coefficient over character-bigram multisets of the
// normalized strings; strings shorter than two characters compare by
// equality.
double dice_similarity(std::string_view a, std::string_view b);

struct Grounding {
  std::size_t mention_index = 0;
  std::optional<std::string> concept_id;
  double similarity = 0;
};

// Best concept for a set of surfaces within one category (highest max-max
// Dice, ties to the smaller id).
struct Candidate {
  std::string concept_id;
  double similarity = 0;
};
std::optional<Candidate> best_candidate(const std::vector<std::string>& surfaces, EntityCategory category,
                                        const KnowledgeBase& kb);

// Grounds the members of one cluster; noise clusters ground member by member.
std::vector<Grounding> ground_cluster(const Cluster& cluster, const std::vector<EntityMention>& mentions,
                                      const KnowledgeBase& kb, double theta);

struct LinkerConfig {
  double eps = 0.15;
  std::size_t min_points = 2;
  double theta = 0.8;
};

// Embeds, clusters, and grounds a batch of mentions. With no table every
// mention is grounded individually. Result is indexed like `mentions`.
std::vector<Grounding> link_mentions(const std::vector<EntityMention>& mentions, const EmbeddingTable* table,
                                     const KnowledgeBase& kb, const LinkerConfig& config);

}  // namespace critex
