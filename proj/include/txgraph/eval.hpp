#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "txgraph/common.hpp"
#include "txgraph/pairing.hpp"
#include "txgraph/sgns.hpp"
#include "txgraph/vocab.hpp"

namespace txgraph {

using KeyEdge = std::pair<std::string, std::string>;  // canonical: first <= second

struct HoldoutSplit {
  std::vector<TransactionPair> train_pairs;
  std::vector<KeyEdge> test_positive;
  std::vector<KeyEdge> test_negative;
  double holdout_fraction = 0.1;
  std::uint64_t seed = 0;
};

/// Positive half of the link-prediction split: distinct edges are visited in
/// random order and held out (all copies) unless that would leave an endpoint
/// without a training pair. `test_negative` is left empty.
inline HoldoutSplit hold_out_edges(std::span<const TransactionPair> pairs, double fraction,
                                   Rng& rng) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw UsageError("holdout fraction must be in (0, 1)");
  std::map<KeyEdge, std::size_t> weight;
  std::map<std::string, std::size_t> appearances;
  for (const auto& p : pairs) {
    ++weight[{p.a, p.b}];
    ++appearances[p.a];
    ++appearances[p.b];
  }
  if (weight.empty()) throw DataError("holdout: empty pair set");

  std::vector<const std::pair<const KeyEdge, std::size_t>*> edges;
  for (const auto& e : weight) edges.push_back(&e);
  rng.shuffle(edges.begin(), edges.end());

  const std::size_t target = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(fraction * static_cast<double>(edges.size()))));
  std::set<KeyEdge> held;
  for (const auto* e : edges) {
    if (held.size() == target) break;
    const auto& [a, b] = e->first;
    std::size_t w = e->second;
    if (appearances[a] > w && appearances[b] > w) {
      appearances[a] -= w;
      appearances[b] -= w;
      held.insert(e->first);
    }
  }
  if (held.size() < target) {
    throw DataError("holdout: graph too small to hold out " + std::to_string(target) +
                    " edges without isolating an entity");
  }

  HoldoutSplit split;
  split.holdout_fraction = fraction;
  for (const auto& p : pairs) {
    if (!held.count({p.a, p.b})) split.train_pairs.push_back(p);
  }
  // Visit order of the shuffle, so the positive list is itself a random sample.
  for (const auto* e : edges) {
    if (held.count(e->first)) split.test_positive.push_back(e->first);
  }
  return split;
}

/// Link-prediction split: hold_out_edges, then as many negatives sampled
/// uniformly from entity pairs that are not edges of the full graph.
inline HoldoutSplit make_holdout(std::span<const TransactionPair> pairs, double fraction,
                                 std::uint64_t seed) {
  Rng rng(seed);
  HoldoutSplit split = hold_out_edges(pairs, fraction, rng);
  split.seed = seed;
  const std::size_t target = split.test_positive.size();

  std::set<KeyEdge> edge_set;
  std::set<std::string> entity_set;
  for (const auto& p : pairs) {
    edge_set.insert({p.a, p.b});
    entity_set.insert(p.a);
    entity_set.insert(p.b);
  }
  std::vector<std::string> entities(entity_set.begin(), entity_set.end());
  const std::size_t n = entities.size();
  const std::size_t possible = n * (n - 1) / 2;
  const std::size_t non_edges = possible - edge_set.size();
  if (non_edges < target) {
    throw DataError("holdout: graph too dense for " + std::to_string(target) + " negatives");
  }
  std::set<KeyEdge> chosen;
  if (non_edges * 4 >= possible) {
    while (chosen.size() < target) {
      std::size_t i = rng.index(n), j = rng.index(n);
      if (i == j) continue;
      KeyEdge e = i < j ? KeyEdge{entities[i], entities[j]} : KeyEdge{entities[j], entities[i]};
      if (edge_set.count(e) || chosen.count(e)) continue;
      chosen.insert(e);
      split.test_negative.push_back(std::move(e));
    }
  } else {
    std::vector<KeyEdge> pool;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        KeyEdge e{entities[i], entities[j]};
        if (!edge_set.count(e)) pool.push_back(std::move(e));
      }
    }
    rng.shuffle(pool.begin(), pool.end());
    pool.resize(target);
    split.test_negative = std::move(pool);
  }
  return split;
}

enum class EdgeScore { logistic_dot, cosine };

inline double cosine(std::span<const double> x, std::span<const double> y) {
  double nx = std::sqrt(dot(x, x)), ny = std::sqrt(dot(y, y));
  if (nx == 0.0 || ny == 0.0) return 0.0;
  return std::clamp(dot(x, y) / (nx * ny), -1.0, 1.0);
}

inline double score_edge(std::span<const double> a, std::span<const double> b,
                         EdgeScore how = EdgeScore::logistic_dot) {
  return how == EdgeScore::cosine ? cosine(a, b) : logistic(dot(a, b));
}

inline double score_edge(const EmbeddingTable& t, std::string_view a, std::string_view b,
                         EdgeScore how = EdgeScore::logistic_dot) {
  auto ia = t.find(a), ib = t.find(b);
  if (!ia || !ib) throw DataError("score_edge: unknown entity");
  return score_edge(t.row(*ia), t.row(*ib), how);
}

/// Mann-Whitney probability that a positive outscores a negative, ties 1/2.
inline double link_prediction_auc(std::span<const double> pos, std::span<const double> neg) {
  if (pos.empty() || neg.empty()) throw DataError("auc: both score sets must be non-empty");
  std::vector<std::pair<double, bool>> all;
  all.reserve(pos.size() + neg.size());
  for (double s : pos) all.emplace_back(s, true);
  for (double s : neg) all.emplace_back(s, false);
  std::sort(all.begin(), all.end(),
            [](const auto& x, const auto& y) { return x.first < y.first; });
  // Count (positive, negative) wins blockwise over tied scores.
  double wins = 0.0;
  std::size_t neg_below = 0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i, p = 0, q = 0;
    while (j < all.size() && all[j].first == all[i].first) {
      (all[j].second ? p : q) += 1;
      ++j;
    }
    wins += static_cast<double>(p) * (static_cast<double>(neg_below) + 0.5 * static_cast<double>(q));
    neg_below += q;
    i = j;
  }
  return wins / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

inline double f1_score(std::size_t tp, std::size_t fp, std::size_t fn) {
  if (tp == 0) return 0.0;
  double precision = double(tp) / double(tp + fp);
  double recall = double(tp) / double(tp + fn);
  return 2.0 * precision * recall / (precision + recall);
}

/// F1 when every score >= threshold is predicted positive.
inline double f1_at_threshold(std::span<const double> pos, std::span<const double> neg,
                              double threshold) {
  std::size_t tp = 0, fp = 0;
  for (double s : pos) tp += s >= threshold;
  for (double s : neg) fp += s >= threshold;
  return f1_score(tp, fp, pos.size() - tp);
}

struct ScoreSplit {
  std::vector<double> val_pos, val_neg, test_pos, test_neg;
};

/// Seeded stratified split: `fraction` of each class goes to validation.
inline ScoreSplit split_validation(std::span<const double> pos, std::span<const double> neg,
                                   double fraction, std::uint64_t seed) {
  ScoreSplit s;
  Rng rng(seed);
  auto deal = [&](std::span<const double> in, std::vector<double>& val, std::vector<double>& test) {
    std::vector<double> v(in.begin(), in.end());
    rng.shuffle(v.begin(), v.end());
    auto nval = static_cast<std::size_t>(std::llround(fraction * double(v.size())));
    nval = std::clamp<std::size_t>(nval, v.size() > 1 ? 1 : 0, v.size() > 1 ? v.size() - 1 : v.size());
    val.assign(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(nval));
    test.assign(v.begin() + static_cast<std::ptrdiff_t>(nval), v.end());
  };
  deal(pos, s.val_pos, s.test_pos);
  deal(neg, s.val_neg, s.test_neg);
  return s;
}

struct F1Result {
  double f1 = 0.0;
  double threshold = 0.0;
  double validation_f1 = 0.0;
};

/// Threshold maximizing F1 on the validation part, F1 reported on the rest.
/// Candidate thresholds sit midway between consecutive distinct validation
/// scores, plus -inf (everything positive).
inline F1Result f1_at_best_threshold(std::span<const double> pos, std::span<const double> neg,
                                     double validation_fraction = 0.3, std::uint64_t seed = 0) {
  if (pos.empty() || neg.empty()) throw DataError("f1: both score sets must be non-empty");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw UsageError("validation fraction must be in (0, 1)");
  }
  auto s = split_validation(pos, neg, validation_fraction, seed);
  std::vector<std::pair<double, bool>> val;
  for (double x : s.val_pos) val.emplace_back(x, true);
  for (double x : s.val_neg) val.emplace_back(x, false);
  std::sort(val.begin(), val.end(), [](const auto& x, const auto& y) { return x.first > y.first; });

  const std::size_t total_pos = s.val_pos.size();
  double best_f1 = -1.0;
  double best_thr = -std::numeric_limits<double>::infinity();
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < val.size();) {
    std::size_t j = i;
    while (j < val.size() && val[j].first == val[i].first) {
      (val[j].second ? tp : fp) += 1;
      ++j;
    }
    double f1 = f1_score(tp, fp, total_pos - tp);
    double thr = j < val.size() ? 0.5 * (val[i].first + val[j].first)
                                : -std::numeric_limits<double>::infinity();
    if (f1 > best_f1) {
      best_f1 = f1;
      best_thr = thr;
    }
    i = j;
  }
  F1Result r;
  r.threshold = best_thr;
  r.validation_f1 = std::max(best_f1, 0.0);
  const auto& tpos = s.test_pos.empty() ? s.val_pos : s.test_pos;
  const auto& tneg = s.test_neg.empty() ? s.val_neg : s.test_neg;
  r.f1 = f1_at_threshold(tpos, tneg, best_thr);
  return r;
}

struct EvalReport {
  double lpa = 0.0;
  double f1 = 0.0;
  double threshold = 0.0;
  std::size_t n_test_pos = 0;
  std::size_t n_test_neg = 0;
  std::uint64_t seed = 0;
  std::size_t dim = 0;
  std::size_t k = 0;
  double epochs = 0.0;
};

struct EvalOptions {
  EdgeScore score = EdgeScore::logistic_dot;
  double validation_fraction = 0.3;
};

inline EvalReport evaluate_link_prediction(const EmbeddingTable& table, const HoldoutSplit& split,
                                           const EvalOptions& opts = {}) {
  auto scores = [&](const std::vector<KeyEdge>& edges) {
    std::vector<double> out;
    out.reserve(edges.size());
    for (const auto& [a, b] : edges) out.push_back(score_edge(table, a, b, opts.score));
    return out;
  };
  auto pos = scores(split.test_positive);
  auto neg = scores(split.test_negative);
  EvalReport r;
  r.lpa = link_prediction_auc(pos, neg);
  auto f1 = f1_at_best_threshold(pos, neg, opts.validation_fraction, split.seed);
  r.f1 = f1.f1;
  r.threshold = f1.threshold;
  r.n_test_pos = pos.size();
  r.n_test_neg = neg.size();
  r.seed = split.seed;
  r.dim = table.dim();
  return r;
}

/// Trains on the split's training pairs and returns the exported input vectors.
inline EmbeddingTable train_embeddings(std::span<const TransactionPair> pairs,
                                       const TrainConfig& cfg, std::ostream* log = nullptr) {
  auto built = build_vocab(pairs);
  auto table = build_sampling_table(built.vocab, cfg.alpha);
  auto ids = encode_pairs(pairs, built.vocab);
  auto model = train(ids, built.vocab, built.edges, table, cfg, log);
  return to_table(model, built.vocab, ExportVectors::input);
}

inline EvalReport train_and_evaluate(const HoldoutSplit& split, const TrainConfig& cfg,
                                     const EvalOptions& opts = {}) {
  auto table = train_embeddings(split.train_pairs, cfg);
  auto r = evaluate_link_prediction(table, split, opts);
  r.k = cfg.negatives;
  r.epochs = cfg.epochs;
  return r;
}

/// One train+eval cycle per dimension over a single shared split.
inline std::vector<EvalReport> dimension_sweep(std::span<const TransactionPair> pairs,
                                               std::span<const std::size_t> dims,
                                               const TrainConfig& base, double holdout_fraction,
                                               std::uint64_t split_seed,
                                               const EvalOptions& opts = {}) {
  auto split = make_holdout(pairs, holdout_fraction, split_seed);
  std::vector<EvalReport> out;
  for (auto d : dims) {
    auto cfg = base;
    cfg.dim = d;
    out.push_back(train_and_evaluate(split, cfg, opts));
  }
  return out;
}

inline std::string format_threshold(double t) {
  if (std::isinf(t)) return t < 0 ? "-inf" : "inf";
  return detail::fmt_f(t, 4);
}

inline void write_report(std::ostream& out, const EvalReport& r) {
  out << "lpa=" << detail::fmt_f(r.lpa, 4) << '\n'
      << "f1=" << detail::fmt_f(r.f1, 4) << '\n'
      << "threshold=" << format_threshold(r.threshold) << '\n'
      << "n_test_pos=" << r.n_test_pos << '\n'
      << "n_test_neg=" << r.n_test_neg << '\n'
      << "seed=" << r.seed << '\n'
      << "dim=" << r.dim << '\n'
      << "k=" << r.k << '\n'
      << "epochs=" << detail::fmt_g(r.epochs, 6) << '\n';
}

inline void write_split(std::ostream& out, const HoldoutSplit& s) {
  for (const auto& [a, b] : s.test_positive) out << a << '\t' << b << "\t1\n";
  for (const auto& [a, b] : s.test_negative) out << a << '\t' << b << "\t0\n";
}

}  // namespace txgraph
