#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "txgraph/common.hpp"
#include "txgraph/eval.hpp"
#include "txgraph/sgns.hpp"

namespace txgraph {

struct Neighbor {
  std::string key;
  double similarity = 0.0;
};

struct NeighborResult {
  std::string query;
  std::vector<Neighbor> neighbors;  // descending similarity
};

/// Up to `limit` keys closest to `key` by edit distance.
inline std::vector<std::string> closest_keys(const EmbeddingTable& t, std::string_view key,
                                             std::size_t limit = 3) {
  std::vector<std::pair<std::size_t, std::string>> scored;
  for (const auto& k : t.keys()) scored.emplace_back(detail::levenshtein(key, k), k);
  std::sort(scored.begin(), scored.end());
  std::vector<std::string> out;
  for (std::size_t i = 0; i < scored.size() && i < limit; ++i) out.push_back(scored[i].second);
  return out;
}

inline std::size_t require_key(const EmbeddingTable& t, std::string_view key) {
  if (auto i = t.find(key)) return *i;
  std::string msg = "unknown entity '" + std::string(key) + "'";
  auto near = closest_keys(t, key);
  if (!near.empty()) {
    msg += "; closest matches:";
    for (const auto& k : near) msg += " " + k;
  }
  throw DataError(msg);
}

/// Exhaustive cosine ranking against `target`, skipping `exclude`; ties by key.
inline std::vector<Neighbor> rank_by_cosine(const EmbeddingTable& t, std::span<const double> target,
                                            std::span<const std::size_t> exclude,
                                            std::size_t top_n) {
  std::vector<std::pair<double, std::size_t>> sims;
  sims.reserve(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (std::find(exclude.begin(), exclude.end(), i) != exclude.end()) continue;
    sims.emplace_back(cosine(target, t.row(i)), i);
  }
  auto better = [&](const auto& x, const auto& y) {
    if (x.first != y.first) return x.first > y.first;
    return t.key(x.second) < t.key(y.second);
  };
  std::size_t n = std::min(top_n, sims.size());
  std::partial_sort(sims.begin(), sims.begin() + static_cast<std::ptrdiff_t>(n), sims.end(), better);
  std::vector<Neighbor> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({t.key(sims[i].second), sims[i].first});
  return out;
}

inline NeighborResult nearest_neighbors(const EmbeddingTable& t, std::string_view query,
                                        std::size_t top_n) {
  if (top_n < 1) throw UsageError("top_n must be >= 1");
  std::size_t q = require_key(t, query);
  std::size_t excl[] = {q};
  return {std::string(query), rank_by_cosine(t, t.row(q), excl, top_n)};
}

/// Ranks entities by cosine to vec(a) - vec(b) + vec(c), excluding a, b and c.
inline std::vector<Neighbor> analogy(const EmbeddingTable& t, std::string_view a,
                                     std::string_view b, std::string_view c, std::size_t top_n) {
  std::size_t ia = require_key(t, a), ib = require_key(t, b), ic = require_key(t, c);
  std::vector<double> target(t.dim());
  for (std::size_t j = 0; j < t.dim(); ++j) target[j] = t.row(ia)[j] - t.row(ib)[j] + t.row(ic)[j];
  std::size_t excl[] = {ia, ib, ic};
  return rank_by_cosine(t, target, excl, top_n);
}

inline void write_neighbors(std::ostream& out, std::span<const Neighbor> ns) {
  for (std::size_t i = 0; i < ns.size(); ++i) {
    out << i + 1 << '\t' << ns[i].key << '\t' << detail::fmt_f(ns[i].similarity, 6) << '\n';
  }
}

struct PcaResult {
  Eigen::MatrixXd components;  // n_components x d, rows orthonormal
  Eigen::VectorXd explained_variance;
  Eigen::VectorXd explained_variance_ratio;
  Eigen::MatrixXd projections;  // N x n_components
  Eigen::RowVectorXd mean;
  double total_variance = 0.0;
};

inline Eigen::MatrixXd as_matrix(const EmbeddingTable& t) {
  Eigen::MatrixXd x(t.size(), t.dim());
  for (std::size_t i = 0; i < t.size(); ++i) {
    for (std::size_t j = 0; j < t.dim(); ++j) x(i, j) = t.row(i)[j];
  }
  return x;
}

/// PCA by eigendecomposition of the sample covariance (N - 1 denominator).
/// Each component is signed so its largest-magnitude entry is positive.
inline PcaResult pca(const Eigen::MatrixXd& x, std::size_t n_components) {
  const auto n = x.rows();
  const auto d = x.cols();
  if (n < 2) throw DataError("pca: need at least two rows");
  if (n_components < 1 || static_cast<Eigen::Index>(n_components) > std::min(n, d)) {
    throw UsageError("pca: n_components must be in [1, min(N, d)]");
  }
  PcaResult r;
  r.mean = x.colwise().mean();
  Eigen::MatrixXd centered = x.rowwise() - r.mean;
  Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw InvariantError("pca: eigendecomposition failed");
  r.total_variance = cov.trace();

  const auto k = static_cast<Eigen::Index>(n_components);
  r.components.resize(k, d);
  r.explained_variance.resize(k);
  for (Eigen::Index c = 0; c < k; ++c) {
    // Eigen returns eigenvalues in ascending order.
    Eigen::Index src = d - 1 - c;
    Eigen::VectorXd v = solver.eigenvectors().col(src);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    r.components.row(c) = v.transpose();
    r.explained_variance(c) = std::max(0.0, solver.eigenvalues()(src));
  }
  r.explained_variance_ratio = r.total_variance > 0
                                   ? Eigen::VectorXd(r.explained_variance / r.total_variance)
                                   : Eigen::VectorXd::Zero(k);
  r.projections = centered * r.components.transpose();
  return r;
}

inline PcaResult pca(const EmbeddingTable& t, std::size_t n_components) {
  return pca(as_matrix(t), n_components);
}

struct DirectionResult {
  double mean_cosine = 0.0;
  std::vector<std::vector<double>> differences;  // one per retained pair
  std::vector<std::pair<std::string, std::string>> retained;
  std::vector<std::pair<std::string, std::string>> excluded;  // zero difference
};

/// Mean over i < j of cos(d_i, d_j) for d = vec(high) - vec(low). With a
/// subspace, the differences are first projected onto the chosen components.
inline DirectionResult direction_consistency(
    const EmbeddingTable& t, std::span<const std::pair<std::string, std::string>> pairs,
    const PcaResult* basis = nullptr, std::span<const std::size_t> subspace = {}) {
  if (pairs.size() < 2) throw UsageError("direction consistency needs at least two pairs");
  DirectionResult r;
  for (const auto& [hi, lo] : pairs) {
    auto h = t.row(require_key(t, hi));
    auto l = t.row(require_key(t, lo));
    std::vector<double> delta(t.dim());
    for (std::size_t j = 0; j < t.dim(); ++j) delta[j] = h[j] - l[j];
    if (basis && !subspace.empty()) {
      std::vector<double> proj(subspace.size());
      for (std::size_t c = 0; c < subspace.size(); ++c) {
        auto idx = static_cast<Eigen::Index>(subspace[c]);
        if (idx >= basis->components.rows()) throw UsageError("subspace index out of range");
        for (std::size_t j = 0; j < t.dim(); ++j) {
          proj[c] += basis->components(idx, static_cast<Eigen::Index>(j)) * delta[j];
        }
      }
      delta = std::move(proj);
    }
    if (dot(delta, delta) == 0.0) {
      r.excluded.emplace_back(hi, lo);
      continue;
    }
    r.differences.push_back(std::move(delta));
    r.retained.emplace_back(hi, lo);
  }
  const std::size_t m = r.differences.size();
  if (m < 2) throw DataError("direction consistency: fewer than two non-zero differences");
  double sum = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) sum += cosine(r.differences[i], r.differences[j]);
  }
  r.mean_cosine = sum / static_cast<double>(m * (m - 1) / 2);
  return r;
}

/// Percentile bootstrap over the retained pairs: each resample draws pairs
/// with replacement and averages cosines over index pairs that refer to two
/// different original pairs. Returns the `alpha` quantile of the resampled
/// means (a one-sided lower confidence bound at level 1 - alpha).
inline double direction_lower_bound(const DirectionResult& r, std::size_t resamples, double alpha,
                                    std::uint64_t seed) {
  const std::size_t m = r.differences.size();
  if (m < 2) throw DataError("direction bootstrap: fewer than two differences");
  if (resamples < 1 || !(alpha > 0.0 && alpha < 1.0)) throw UsageError("direction bootstrap: bad parameters");
  std::vector<double> cos(m * m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) cos[i * m + j] = cosine(r.differences[i], r.differences[j]);
  }
  Rng rng(seed);
  std::vector<double> means;
  std::vector<std::size_t> pick(m);
  while (means.size() < resamples) {
    for (auto& p : pick) p = rng.index(m);
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = i + 1; j < m; ++j) {
        if (pick[i] == pick[j]) continue;
        sum += cos[pick[i] * m + pick[j]];
        ++n;
      }
    }
    if (n > 0) means.push_back(sum / static_cast<double>(n));
  }
  std::sort(means.begin(), means.end());
  auto idx = static_cast<std::size_t>(std::floor(alpha * static_cast<double>(means.size())));
  return means[std::min(idx, means.size() - 1)];
}

struct SubspaceScan {
  std::size_t first = 0;
  std::size_t second = 1;
  double mean_cosine = -2.0;
};

/// Component pair (among the first `n_components`) maximizing direction consistency.
inline SubspaceScan scan_subspaces(const EmbeddingTable& t,
                                   std::span<const std::pair<std::string, std::string>> pairs,
                                   const PcaResult& basis) {
  SubspaceScan best;
  const auto k = static_cast<std::size_t>(basis.components.rows());
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      std::size_t sub[] = {i, j};
      try {
        double c = direction_consistency(t, pairs, &basis, sub).mean_cosine;
        if (c > best.mean_cosine) best = {i, j, c};
      } catch (const DataError&) {
        // all differences vanish in this subspace
      }
    }
  }
  return best;
}

/// Tab-separated `key x y` using two PCA coordinates.
inline void export_projection(std::ostream& out, const EmbeddingTable& t, const PcaResult& p,
                              std::size_t cx, std::size_t cy) {
  auto ix = static_cast<Eigen::Index>(cx), iy = static_cast<Eigen::Index>(cy);
  if (ix >= p.projections.cols() || iy >= p.projections.cols()) {
    throw UsageError("projection component index out of range");
  }
  for (std::size_t i = 0; i < t.size(); ++i) {
    auto r = static_cast<Eigen::Index>(i);
    out << t.key(i) << '\t' << detail::fmt_f(p.projections(r, ix), 6) << '\t'
        << detail::fmt_f(p.projections(r, iy), 6) << '\n';
  }
}

}  // namespace txgraph
