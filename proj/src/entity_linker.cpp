#include "critex/entity_linker.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <numeric>
#include <tuple>

#include <spdlog/spdlog.h>

#include "critex/error.hpp"
#include "critex/text.hpp"

namespace critex {

const std::vector<float>* EmbeddingTable::find(std::string_view token) const {
  auto it = vectors_.find(std::string(token));
  return it == vectors_.end() ? nullptr : &it->second;
}

void EmbeddingTable::insert(std::string token, std::vector<float> vector) {
  if (vector.size() != dimension_)
    throw LoadError("vector for '" + token + "' has " + std::to_string(vector.size()) + " components, expected " +
                    std::to_string(dimension_));
  for (float v : vector)
    if (!std::isfinite(v)) throw LoadError("vector for '" + token + "' has a non-finite component");
  vectors_[std::move(token)] = std::move(vector);
}

EmbeddingTable parse_embeddings(std::string_view content, std::string_view source) {
  const auto lines = text::split(content, '\n');
  std::size_t number = 0;
  std::optional<EmbeddingTable> table;
  std::size_t declared = 0;
  for (const auto& raw : lines) {
    ++number;
    const auto where = std::string(source) + ":" + std::to_string(number);
    auto line = text::trim(raw);
    if (line.empty()) continue;
    std::vector<std::string> fields;
    for (auto& f : text::split(line, ' '))
      if (!f.empty()) fields.push_back(std::move(f));
    if (!table) {
      if (fields.size() != 2) throw LoadError(where + ": header must be '<vocab_count> <dimension>'");
      auto count = text::parse_double(fields[0]);
      auto dim = text::parse_double(fields[1]);
      if (!count || !dim || *count < 0 || *dim < 1 || *count != std::floor(*count) || *dim != std::floor(*dim))
        throw LoadError(where + ": malformed header");
      declared = static_cast<std::size_t>(*count);
      table.emplace(static_cast<std::size_t>(*dim));
      continue;
    }
    if (fields.size() != table->dimension() + 1)
      throw LoadError(where + ": expected " + std::to_string(table->dimension()) + " components, got " +
                      std::to_string(fields.size() - 1));
    std::vector<float> vec;
    vec.reserve(table->dimension());
    for (std::size_t k = 1; k < fields.size(); ++k) {
      auto v = text::parse_double(fields[k]);
      if (!v) throw LoadError(where + ": non-numeric component '" + fields[k] + "'");
      vec.push_back(static_cast<float>(*v));
    }
    if (table->find(fields[0])) spdlog::warn("{}: duplicate token '{}', keeping the last occurrence", where, fields[0]);
    try {
      table->insert(fields[0], std::move(vec));
    } catch (const LoadError& e) {
      throw LoadError(where + ": " + e.what());
    }
  }
  if (!table) throw LoadError(std::string(source) + ": missing header");
  if (table->size() != declared)
    spdlog::warn("{}: header declares {} vectors, found {}", source, declared, table->size());
  return std::move(*table);
}

EmbeddingTable load_embeddings(const std::filesystem::path& path) {
  return parse_embeddings(read_file(path), path.string());
}

MentionVector embed_mention(const EntityMention& mention, const EmbeddingTable& table) {
  MentionVector out;
  const auto tokens = tokenize(mention.surface);
  if (tokens.empty()) return out;
  std::vector<double> sum(table.dimension(), 0.0);
  std::size_t found = 0;
  for (const auto& t : tokens) {
    const auto* v = table.find(t.delex);
    if (!v) continue;
    for (std::size_t k = 0; k < v->size(); ++k) sum[k] += (*v)[k];
    ++found;
  }
  out.in_vocab_fraction = static_cast<double>(found) / static_cast<double>(tokens.size());
  if (found == 0) return out;
  for (auto& x : sum) x /= static_cast<double>(found);
  out.vector = std::move(sum);
  return out;
}

namespace {

double norm(const std::vector<double>& v) { return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0)); }

}  // namespace

double cosine_distance(const std::vector<double>& a, const std::vector<double>& b) {
  const double na = norm(a), nb = norm(b);
  if (na == 0 || nb == 0) return 1.0;
  return 1.0 - std::inner_product(a.begin(), a.end(), b.begin(), 0.0) / (na * nb);
}

std::vector<int> dbscan(const std::vector<std::vector<double>>& points, double eps, std::size_t min_points) {
  constexpr int kUnvisited = -2, kNoise = -1;
  const auto n = points.size();
  std::vector<int> labels(n, kUnvisited);
  std::vector<bool> usable(n);
  for (std::size_t i = 0; i < n; ++i) {
    usable[i] = norm(points[i]) > 0;
    if (!usable[i]) {
      spdlog::warn("zero-norm vector at position {} excluded from clustering", i);
      labels[i] = kNoise;
    }
  }
  const auto neighbours = [&](std::size_t i) {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < n; ++j)
      if (usable[j] && cosine_distance(points[i], points[j]) <= eps) out.push_back(j);
    return out;
  };

  int next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] != kUnvisited) continue;
    auto seeds = neighbours(i);
    if (seeds.size() < min_points) {
      labels[i] = kNoise;
      continue;
    }
    const int cluster = next++;
    labels[i] = cluster;
    std::deque<std::size_t> queue(seeds.begin(), seeds.end());
    while (!queue.empty()) {
      const auto j = queue.front();
      queue.pop_front();
      if (labels[j] == kNoise) labels[j] = cluster;  // border point
      if (labels[j] != kUnvisited) continue;
      labels[j] = cluster;
      auto more = neighbours(j);
      if (more.size() >= min_points) queue.insert(queue.end(), more.begin(), more.end());
    }
  }
  return labels;
}

std::vector<Cluster> cluster_mentions(const std::vector<EntityMention>& mentions,
                                      const std::vector<MentionVector>& vectors, double eps, std::size_t min_points) {
  if (mentions.size() != vectors.size()) throw Error("cluster_mentions: mentions and vectors differ in length");
  if (!(eps > 0) || min_points < 1) throw Error("cluster_mentions: eps must be > 0 and min_points >= 1");

  std::vector<std::size_t> order(mentions.size());
  std::iota(order.begin(), order.end(), 0);
  const auto key = [&](std::size_t i) {
    const auto& m = mentions[i];
    return std::tie(m.trial_id, m.block_kind, m.line_index, m.first_token, m.last_token, m.surface);
  };
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key(a) < key(b); });

  std::vector<std::size_t> groundable;
  std::vector<std::vector<double>> points;
  std::vector<std::size_t> noise;
  for (auto i : order) {
    if (vectors[i].groundable()) {
      groundable.push_back(i);
      points.push_back(vectors[i].vector);
    } else {
      noise.push_back(i);
    }
  }

  const auto labels = dbscan(points, eps, min_points);
  std::map<int, Cluster> clusters;
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (labels[k] < 0) {
      noise.push_back(groundable[k]);
      continue;
    }
    auto& c = clusters[labels[k]];
    c.label = labels[k];
    c.member_indices.push_back(groundable[k]);
  }
  std::vector<Cluster> out;
  for (auto& [label, c] : clusters) out.push_back(std::move(c));
  if (!noise.empty()) {
    std::sort(noise.begin(), noise.end(), [&](std::size_t a, std::size_t b) { return key(a) < key(b); });
    out.push_back(Cluster{std::move(noise), std::nullopt});
  }
  return out;
}

namespace {

std::map<std::u32string, std::size_t> bigrams(const std::vector<char32_t>& cps) {
  std::map<std::u32string, std::size_t> out;
  for (std::size_t k = 0; k + 1 < cps.size(); ++k) ++out[std::u32string{cps[k], cps[k + 1]}];
  return out;
}

}  // namespace

double dice_similarity(std::string_view a, std::string_view b) {
  const auto ca = text::decode_utf8(text::normalize_name(a));
  const auto cb = text::decode_utf8(text::normalize_name(b));
  if (ca.size() < 2 || cb.size() < 2) return ca == cb ? 1.0 : 0.0;
  const auto ba = bigrams(ca), bb = bigrams(cb);
  std::size_t shared = 0;
  for (const auto& [gram, count] : ba)
    if (auto it = bb.find(gram); it != bb.end()) shared += std::min(count, it->second);
  return 2.0 * static_cast<double>(shared) / static_cast<double>((ca.size() - 1) + (cb.size() - 1));
}

std::optional<Candidate> best_candidate(const std::vector<std::string>& surfaces, EntityCategory category,
                                        const KnowledgeBase& kb) {
  std::optional<Candidate> best;
  for (const auto& [id, c] : kb.concepts()) {
    if (c.category != category) continue;
    double score = 0;
    for (const auto& s : surfaces) {
      score = std::max(score, dice_similarity(s, c.preferred_name));
      for (const auto& syn : c.synonyms) score = std::max(score, dice_similarity(s, syn));
    }
    // Ids iterate ascending, so strict improvement keeps the smaller id on ties.
    if (!best || score > best->similarity) best = Candidate{id, score};
  }
  return best;
}

std::vector<Grounding> ground_cluster(const Cluster& cluster, const std::vector<EntityMention>& mentions,
                                      const KnowledgeBase& kb, double theta) {
  std::vector<Grounding> out;
  const auto individually = [&] {
    for (auto i : cluster.member_indices) {
      Grounding g{i, std::nullopt, 0};
      if (auto cand = best_candidate({mentions[i].surface}, mentions[i].category, kb)) {
        g.similarity = cand->similarity;
        if (cand->similarity >= theta) g.concept_id = cand->concept_id;
      }
      out.push_back(std::move(g));
    }
  };
  if (!cluster.label) {
    individually();
    return out;
  }

  std::map<EntityCategory, std::size_t> votes;
  for (auto i : cluster.member_indices) ++votes[mentions[i].category];
  EntityCategory majority = votes.begin()->first;
  std::size_t top = 0;
  for (const auto& [cat, count] : votes)
    if (count > top) {
      top = count;
      majority = cat;
    }
  std::vector<std::string> surfaces;
  for (auto i : cluster.member_indices) surfaces.push_back(mentions[i].surface);
  auto cand = best_candidate(surfaces, majority, kb);
  if (cand && cand->similarity >= theta) {
    for (auto i : cluster.member_indices) out.push_back(Grounding{i, cand->concept_id, cand->similarity});
    return out;
  }
  individually();
  return out;
}

std::vector<Grounding> link_mentions(const std::vector<EntityMention>& mentions, const EmbeddingTable* table,
                                     const KnowledgeBase& kb, const LinkerConfig& config) {
  std::vector<Cluster> clusters;
  if (table) {
    std::vector<MentionVector> vectors;
    vectors.reserve(mentions.size());
    for (const auto& m : mentions) vectors.push_back(embed_mention(m, *table));
    clusters = cluster_mentions(mentions, vectors, config.eps, config.min_points);
  } else if (!mentions.empty()) {
    Cluster all{{}, std::nullopt};
    for (std::size_t i = 0; i < mentions.size(); ++i) all.member_indices.push_back(i);
    clusters.push_back(std::move(all));
  }
  std::vector<Grounding> out(mentions.size());
  for (const auto& c : clusters)
    for (auto& g : ground_cluster(c, mentions, kb, config.theta)) out[g.mention_index] = std::move(g);
  return out;
}

}  // namespace critex
