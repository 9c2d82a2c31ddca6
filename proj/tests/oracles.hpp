#pragma once

// Slow, independent reference implementations. Each one recomputes its quantity
// straight from the definition so it shares no code with the library path.

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "txgraph/common.hpp"
#include "txgraph/sgns.hpp"

namespace txgraph::oracle {

// Negative-sampling loss evaluated in extended precision.
inline long double pair_loss(const EmbeddingModel& m, EntityId c, EntityId p,
                             const std::vector<EntityId>& negs) {
  auto dotl = [&](EntityId a, EntityId b) {
    long double s = 0;
    for (std::size_t i = 0; i < m.dim(); ++i)
      s += static_cast<long double>(m.input(a)[i]) * static_cast<long double>(m.context(b)[i]);
    return s;
  };
  auto sig = [](long double x) { return 1.0L / (1.0L + std::exp(-x)); };
  long double loss = -std::log(sig(dotl(c, p)));
  for (auto n : negs) loss -= std::log(1.0L - sig(dotl(c, n)));
  return loss;
}

inline double rel_error(double analytic, double numeric) {
  const double scale = std::max(std::abs(analytic), std::abs(numeric));
  if (scale < 1e-8) return std::abs(analytic - numeric);
  return std::abs(analytic - numeric) / scale;
}

// Largest relative error between pair_gradients and central differences on
// one random instance. Center, positive and negatives are distinct ids.
inline double gradient_check(std::uint64_t seed, std::size_t d = 8, std::size_t k = 5,
                             double h = 1e-5) {
  const std::size_t n = k + 4;
  EmbeddingModel m(n, d);
  Rng rng(seed);
  for (auto& x : m.input_data()) x = rng.normal() * 0.5;
  for (auto& x : m.context_data()) x = rng.normal() * 0.5;
  const EntityId c = 0, p = 1;
  std::vector<EntityId> negs;
  for (std::size_t i = 0; i < k; ++i) negs.push_back(static_cast<EntityId>(2 + i));

  auto g = pair_gradients(m, c, p, negs);
  auto f = [&] { return txgraph::pair_loss(m, c, p, negs); };
  double worst = 0.0;
  auto probe = [&](double& x, double analytic) {
    const double saved = x;
    x = saved + h;
    const double up = f();
    x = saved - h;
    const double down = f();
    x = saved;
    worst = std::max(worst, rel_error(analytic, (up - down) / (2 * h)));
  };
  for (std::size_t i = 0; i < d; ++i) {
    probe(m.input(c)[i], g.center[i]);
    probe(m.context(p)[i], g.positive[i]);
    for (std::size_t j = 0; j < k; ++j) probe(m.context(negs[j])[i], g.negatives[j][i]);
  }
  return worst;
}

// Every (positive, negative) comparison, ties counted as one half.
inline double mann_whitney(const std::vector<double>& pos, const std::vector<double>& neg) {
  double wins = 0;
  for (double p : pos)
    for (double q : neg) wins += p > q ? 1.0 : (p == q ? 0.5 : 0.0);
  return wins / (double(pos.size()) * double(neg.size()));
}

// Area under the step-wise precision-recall curve: one operating point per
// distinct score (predict positive when score >= t), precision weighted by the
// recall gained at that point.
inline double aupr_all_thresholds(const std::vector<double>& scores, const std::vector<bool>& labels) {
  std::set<double, std::greater<>> thresholds(scores.begin(), scores.end());
  double positives = 0;
  for (bool l : labels) positives += l;
  double area = 0, prev_recall = 0;
  for (double t : thresholds) {
    double tp = 0, predicted = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (scores[i] >= t) {
        ++predicted;
        tp += labels[i];
      }
    }
    const double recall = tp / positives;
    area += (recall - prev_recall) * (tp / predicted);
    prev_recall = recall;
  }
  return area;
}

// Random score set with deliberate ties (scores drawn from a coarse grid half the time).
inline std::vector<double> random_scores(Rng& rng, std::size_t n, double shift) {
  std::vector<double> v(n);
  for (auto& x : v) {
    x = rng.normal() + shift;
    if (rng.bernoulli(0.5)) x = std::round(x * 4.0) / 4.0;
  }
  return v;
}

}  // namespace txgraph::oracle
