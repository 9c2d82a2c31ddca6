#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "txgraph/common.hpp"
#include "txgraph/pairing.hpp"

namespace txgraph {

/// Dense ids over the entities seen in the training pairs. Ids are assigned by
/// descending count, ties by key.
class Vocabulary {
 public:
  Vocabulary() = default;

  std::size_t size() const { return keys_.size(); }
  bool empty() const { return keys_.empty(); }

  const std::string& key(EntityId id) const { return keys_.at(id); }
  std::size_t count(EntityId id) const { return counts_.at(id); }
  const std::vector<std::size_t>& counts() const { return counts_; }
  const std::vector<std::string>& keys() const { return keys_; }

  std::optional<EntityId> find(std::string_view key) const {
    auto it = index_.find(std::string(key));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  EntityId id(std::string_view key) const {
    if (auto v = find(key)) return *v;
    throw DataError("unknown entity '" + std::string(key) + "'");
  }

  static Vocabulary from_counts(std::unordered_map<std::string, std::size_t> counts) {
    std::vector<std::pair<std::string, std::size_t>> items(counts.begin(), counts.end());
    std::sort(items.begin(), items.end(), [](const auto& x, const auto& y) {
      if (x.second != y.second) return x.second > y.second;
      return x.first < y.first;
    });
    Vocabulary v;
    for (auto& [k, c] : items) {
      v.index_.emplace(k, static_cast<EntityId>(v.keys_.size()));
      v.keys_.push_back(std::move(k));
      v.counts_.push_back(c);
    }
    return v;
  }

 private:
  std::vector<std::string> keys_;
  std::vector<std::size_t> counts_;
  std::unordered_map<std::string, EntityId> index_;
};

/// Exact membership over the distinct canonical id pairs of the training data.
class EdgeSet {
 public:
  void insert(EntityId x, EntityId y) { edges_.insert(encode(x, y)); }
  bool contains(EntityId x, EntityId y) const { return edges_.count(encode(x, y)) != 0; }
  std::size_t size() const { return edges_.size(); }

  std::vector<std::pair<EntityId, EntityId>> sorted() const {
    std::vector<std::pair<EntityId, EntityId>> out;
    out.reserve(edges_.size());
    for (auto e : edges_) out.emplace_back(static_cast<EntityId>(e >> 32), static_cast<EntityId>(e));
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  static std::uint64_t encode(EntityId x, EntityId y) {
    if (y < x) std::swap(x, y);
    return (static_cast<std::uint64_t>(x) << 32) | y;
  }
  std::unordered_set<std::uint64_t> edges_;
};

struct VocabBuild {
  Vocabulary vocab;
  EdgeSet edges;
};

inline VocabBuild build_vocab(std::span<const TransactionPair> pairs) {
  if (pairs.empty()) throw DataError("empty training set");
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& p : pairs) {
    ++counts[p.a];
    ++counts[p.b];
  }
  VocabBuild out{Vocabulary::from_counts(std::move(counts)), {}};
  for (const auto& p : pairs) out.edges.insert(out.vocab.id(p.a), out.vocab.id(p.b));
  return out;
}

using IdPair = std::pair<EntityId, EntityId>;

inline std::vector<IdPair> encode_pairs(std::span<const TransactionPair> pairs,
                                        const Vocabulary& vocab) {
  std::vector<IdPair> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.emplace_back(vocab.id(p.a), vocab.id(p.b));
  return out;
}

inline void write_vocab(std::ostream& out, const Vocabulary& vocab) {
  for (EntityId i = 0; i < vocab.size(); ++i) {
    out << i << '\t' << vocab.key(i) << '\t' << vocab.count(i) << '\n';
  }
}

/// Smoothed unigram distribution P(i) = count_i^alpha / sum_j count_j^alpha.
class NegativeSamplingTable {
 public:
  NegativeSamplingTable() = default;

  NegativeSamplingTable(std::span<const std::size_t> counts, double alpha) : alpha_(alpha) {
    if (counts.empty()) throw DataError("sampling table needs a non-empty vocabulary");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw UsageError("alpha must be in [0, 1]");
    probs_.resize(counts.size());
    double total = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
      probs_[i] = std::pow(static_cast<double>(counts[i]), alpha);
      total += probs_[i];
    }
    cdf_.resize(counts.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
      probs_[i] /= total;
      acc += probs_[i];
      cdf_[i] = acc;
    }
    cdf_.back() = 1.0;
  }

  std::size_t size() const { return probs_.size(); }
  double alpha() const { return alpha_; }
  double probability(EntityId id) const { return probs_.at(id); }
  const std::vector<double>& probabilities() const { return probs_; }

  EntityId sample(Rng& rng) const {
    double u = rng.uniform();
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    if (it == cdf_.end()) --it;
    return static_cast<EntityId>(it - cdf_.begin());
  }

 private:
  double alpha_ = 0.75;
  std::vector<double> probs_;
  std::vector<double> cdf_;
};

inline NegativeSamplingTable build_sampling_table(const Vocabulary& vocab, double alpha = 0.75) {
  return NegativeSamplingTable(vocab.counts(), alpha);
}

inline constexpr int kNegativeRetries = 10;

/// Draws `out.size()` negatives for (center, positive). A draw equal to either
/// id, or adjacent to the center in `edges`, is redrawn; after
/// kNegativeRetries failed redraws the last draw is kept and `escapes` (when
/// given) is incremented.
inline void sample_negatives(const NegativeSamplingTable& table, const EdgeSet& edges,
                             EntityId center, EntityId positive, std::span<EntityId> out,
                             Rng& rng, std::atomic<std::size_t>* escapes = nullptr) {
  for (auto& slot : out) {
    EntityId draw = table.sample(rng);
    int redraws = 0;
    while (draw == center || draw == positive || edges.contains(center, draw)) {
      if (redraws == kNegativeRetries) {
        if (escapes) escapes->fetch_add(1, std::memory_order_relaxed);
        break;
      }
      draw = table.sample(rng);
      ++redraws;
    }
    slot = draw;
  }
}

inline std::vector<EntityId> sample_negatives(const NegativeSamplingTable& table,
                                              const EdgeSet& edges, EntityId center,
                                              EntityId positive, std::size_t k, Rng& rng,
                                              std::atomic<std::size_t>* escapes = nullptr) {
  if (k < 1) throw UsageError("k must be >= 1");
  std::vector<EntityId> out(k);
  sample_negatives(table, edges, center, positive, out, rng, escapes);
  return out;
}

}  // namespace txgraph
