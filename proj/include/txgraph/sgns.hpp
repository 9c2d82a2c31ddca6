#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <istream>
#include <mutex>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "txgraph/common.hpp"
#include "txgraph/vocab.hpp"

namespace txgraph {

inline constexpr double kLogisticClamp = 700.0;

inline double logistic(double x) {
  x = std::clamp(x, -kLogisticClamp, kLogisticClamp);
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

// log(1 + e^x) without overflow.
inline double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

inline double dot(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

/// Input ("phi") and context matrices, both N x d, row-major.
class EmbeddingModel {
 public:
  EmbeddingModel() = default;
  EmbeddingModel(std::size_t n, std::size_t dim)
      : n_(n), dim_(dim), input_(n * dim, 0.0), context_(n * dim, 0.0) {
    if (dim < 1) throw UsageError("dimension must be >= 1");
  }

  /// Input rows uniform in [-0.5/d, 0.5/d], context rows zero.
  static EmbeddingModel initialized(std::size_t n, std::size_t dim, std::uint64_t seed) {
    EmbeddingModel m(n, dim);
    Rng rng(seed);
    const double half = 0.5 / static_cast<double>(dim);
    for (auto& x : m.input_) x = rng.uniform(-half, half);
    return m;
  }

  std::size_t size() const { return n_; }
  std::size_t dim() const { return dim_; }

  std::span<double> input(EntityId i) { return {input_.data() + i * dim_, dim_}; }
  std::span<const double> input(EntityId i) const { return {input_.data() + i * dim_, dim_}; }
  std::span<double> context(EntityId i) { return {context_.data() + i * dim_, dim_}; }
  std::span<const double> context(EntityId i) const { return {context_.data() + i * dim_, dim_}; }

  std::vector<double>& input_data() { return input_; }
  std::vector<double>& context_data() { return context_; }
  const std::vector<double>& input_data() const { return input_; }
  const std::vector<double>& context_data() const { return context_; }

  /// First entity with a non-finite entry in either matrix.
  std::optional<EntityId> first_non_finite() const {
    for (std::size_t i = 0; i < n_ * dim_; ++i) {
      if (!std::isfinite(input_[i]) || !std::isfinite(context_[i])) {
        return static_cast<EntityId>(i / dim_);
      }
    }
    return std::nullopt;
  }

  bool operator==(const EmbeddingModel&) const = default;

 private:
  std::size_t n_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> input_;
  std::vector<double> context_;
};

/// Negative-sampling loss of one (center, positive, negatives) example:
/// -log s(u.v+) - sum_n log(1 - s(u.v-_n)).
inline double pair_loss(const EmbeddingModel& m, EntityId center, EntityId positive,
                        std::span<const EntityId> negatives) {
  auto u = m.input(center);
  double loss = softplus(-dot(u, m.context(positive)));
  for (auto n : negatives) loss += softplus(dot(u, m.context(n)));
  return loss;
}

struct PairGradients {
  std::vector<double> center;                  // d/du
  std::vector<double> positive;                // d/dv+
  std::vector<std::vector<double>> negatives;  // d/dv-_n, one per listed negative
};

inline PairGradients pair_gradients(const EmbeddingModel& m, EntityId center, EntityId positive,
                                    std::span<const EntityId> negatives) {
  const std::size_t d = m.dim();
  auto u = m.input(center);
  PairGradients g;
  g.center.assign(d, 0.0);
  auto vp = m.context(positive);
  double cp = logistic(dot(u, vp)) - 1.0;
  g.positive.resize(d);
  for (std::size_t i = 0; i < d; ++i) {
    g.center[i] += cp * vp[i];
    g.positive[i] = cp * u[i];
  }
  for (auto n : negatives) {
    auto vn = m.context(n);
    double cn = logistic(dot(u, vn));
    std::vector<double> gn(d);
    for (std::size_t i = 0; i < d; ++i) {
      g.center[i] += cn * vn[i];
      gn[i] = cn * u[i];
    }
    g.negatives.push_back(std::move(gn));
  }
  return g;
}

inline double mean_pair_loss(const EmbeddingModel& m, std::span<const IdPair> pairs,
                             const NegativeSamplingTable& table, const EdgeSet& edges,
                             std::size_t k, std::uint64_t seed) {
  if (pairs.empty()) return 0.0;
  Rng rng(seed);
  std::vector<EntityId> neg(k);
  double total = 0.0;
  for (auto [a, b] : pairs) {
    sample_negatives(table, edges, a, b, neg, rng);
    total += pair_loss(m, a, b, neg);
    sample_negatives(table, edges, b, a, neg, rng);
    total += pair_loss(m, b, a, neg);
  }
  return total / (2.0 * static_cast<double>(pairs.size()));
}

struct TrainConfig {
  std::size_t dim = 16;
  std::size_t negatives = 5;
  double learning_rate = 0.025;
  double epochs = 2.0;
  std::uint64_t seed = 1;
  std::size_t workers = 1;
  double alpha = 0.75;

  void validate() const {
    if (dim < 1) throw UsageError("dim must be >= 1");
    if (negatives < 1) throw UsageError("negatives must be >= 1");
    if (!(learning_rate > 0)) throw UsageError("learning rate must be > 0");
    if (!(epochs > 0)) throw UsageError("epochs must be > 0");
    if (workers < 1) throw UsageError("workers must be >= 1");
  }
};

struct TrainStats {
  std::size_t updates = 0;
  std::size_t negative_escapes = 0;
  std::vector<double> interval_loss;  // mean loss per 1% progress step
};

inline constexpr double kMinLearningRateFraction = 1e-4;

namespace detail {

// Relaxed atomic access keeps concurrent workers free of torn doubles while
// compiling to plain loads and stores.
inline double load(double& x) { return std::atomic_ref<double>(x).load(std::memory_order_relaxed); }
inline void store(double& x, double v) {
  std::atomic_ref<double>(x).store(v, std::memory_order_relaxed);
}

// One SGD step for (center, positive, negatives); returns the pre-update loss.
inline double sgd_step(EmbeddingModel& m, EntityId center, EntityId positive,
                       std::span<const EntityId> negatives, double lr,
                       std::vector<double>& u, std::vector<double>& u_grad) {
  const std::size_t d = m.dim();
  auto urow = m.input(center);
  for (std::size_t i = 0; i < d; ++i) u[i] = load(urow[i]);
  std::fill(u_grad.begin(), u_grad.end(), 0.0);
  double loss = 0.0;
  auto update = [&](EntityId ctx, double label) {
    auto v = m.context(ctx);
    double s = 0.0;
    for (std::size_t i = 0; i < d; ++i) s += u[i] * load(v[i]);
    loss += label > 0 ? softplus(-s) : softplus(s);
    double g = lr * (label - logistic(s));
    for (std::size_t i = 0; i < d; ++i) {
      double vi = load(v[i]);
      u_grad[i] += g * vi;
      store(v[i], vi + g * u[i]);
    }
  };
  update(positive, 1.0);
  for (auto n : negatives) update(n, 0.0);
  for (std::size_t i = 0; i < d; ++i) store(urow[i], load(urow[i]) + u_grad[i]);
  return loss;
}

inline void check_finite(const EmbeddingModel& m, const Vocabulary& vocab) {
  if (auto bad = m.first_non_finite()) {
    throw InvariantError("non-finite embedding value for entity '" + vocab.key(*bad) + "'");
  }
}

}  // namespace detail

/// SGD over the pair stream with the negative-sampling objective.
///
/// Every pair visit performs two updates, (a -> b) then (b -> a), each with
/// fresh negatives. The pair order is reshuffled every epoch; a fractional
/// final epoch visits a prefix of its permutation. The learning rate decays
/// linearly to `learning_rate * 1e-4`. With workers > 1 the matrices are
/// updated without locks; only workers == 1 is reproducible.
inline EmbeddingModel train(std::span<const IdPair> pairs, const Vocabulary& vocab,
                            const EdgeSet& edges, const NegativeSamplingTable& table,
                            const TrainConfig& cfg, std::ostream* log = nullptr,
                            TrainStats* stats = nullptr) {
  cfg.validate();
  auto model = EmbeddingModel::initialized(vocab.size(), cfg.dim, cfg.seed);
  if (pairs.empty()) return model;

  const std::size_t n_pairs = pairs.size();
  const auto total_visits = static_cast<std::size_t>(std::llround(cfg.epochs * n_pairs));
  const std::size_t full_epochs = (total_visits + n_pairs - 1) / n_pairs;

  std::vector<std::vector<std::uint32_t>> perms(full_epochs);
  for (std::size_t e = 0; e < full_epochs; ++e) {
    perms[e].resize(n_pairs);
    std::iota(perms[e].begin(), perms[e].end(), 0u);
    Rng rng(detail::mix_seed(cfg.seed, 1000 + e));
    rng.shuffle(perms[e].begin(), perms[e].end());
  }

  std::atomic<std::size_t> visited{0};
  std::atomic<std::size_t> escapes{0};
  std::atomic<double> loss_acc{0.0};
  std::atomic<std::size_t> loss_n{0};
  std::mutex report_mu;
  std::vector<double> interval_loss;
  std::exception_ptr failure;
  std::atomic<bool> abort{false};

  const std::size_t step = std::max<std::size_t>(1, total_visits / 100);

  auto report = [&](std::size_t done) {
    std::lock_guard lock(report_mu);
    double sum = loss_acc.exchange(0.0);
    std::size_t cnt = loss_n.exchange(0);
    double mean = cnt ? sum / static_cast<double>(cnt) : 0.0;
    interval_loss.push_back(mean);
    double lr = cfg.learning_rate *
                std::max(kMinLearningRateFraction, 1.0 - double(done) / double(total_visits));
    if (log) {
      *log << "epoch=" << (done - 1) / n_pairs + 1
           << " progress=" << detail::fmt_f(100.0 * double(done) / double(total_visits), 0)
           << "% lr=" << detail::fmt_g(lr, 6) << " mean_loss=" << detail::fmt_f(mean, 6) << '\n';
    }
    if (cfg.workers == 1) detail::check_finite(model, vocab);
  };

  auto worker = [&](std::size_t w) {
    try {
      Rng rng(detail::mix_seed(cfg.seed, w));
      std::vector<EntityId> neg(cfg.negatives);
      std::vector<double> u(cfg.dim), u_grad(cfg.dim);
      // Visit positions are dealt to workers round-robin in blocks.
      constexpr std::size_t kBlock = 1024;
      double local_loss = 0.0;
      std::size_t local_n = 0;
      for (std::size_t block = w * kBlock; block < total_visits && !abort;
           block += cfg.workers * kBlock) {
        std::size_t end = std::min(total_visits, block + kBlock);
        for (std::size_t pos = block; pos < end; ++pos) {
          auto [a, b] = pairs[perms[pos / n_pairs][pos % n_pairs]];
          std::size_t done_before = visited.load(std::memory_order_relaxed);
          double lr = cfg.learning_rate *
                      std::max(kMinLearningRateFraction,
                               1.0 - double(done_before) / double(total_visits));
          sample_negatives(table, edges, a, b, neg, rng, &escapes);
          local_loss += detail::sgd_step(model, a, b, neg, lr, u, u_grad);
          sample_negatives(table, edges, b, a, neg, rng, &escapes);
          local_loss += detail::sgd_step(model, b, a, neg, lr, u, u_grad);
          local_n += 2;
          std::size_t done = visited.fetch_add(1) + 1;
          if (done % step == 0 || done == total_visits) {
            loss_acc.fetch_add(local_loss);
            loss_n.fetch_add(local_n);
            local_loss = 0.0;
            local_n = 0;
            report(done);
          }
        }
        loss_acc.fetch_add(local_loss);
        loss_n.fetch_add(local_n);
        local_loss = 0.0;
        local_n = 0;
      }
    } catch (...) {
      std::lock_guard lock(report_mu);
      if (!failure) failure = std::current_exception();
      abort = true;
    }
  };

  if (cfg.workers == 1) {
    worker(0);
  } else {
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < cfg.workers; ++w) threads.emplace_back(worker, w);
    for (auto& t : threads) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  detail::check_finite(model, vocab);

  if (stats) {
    stats->updates = 2 * total_visits;
    stats->negative_escapes = escapes.load();
    stats->interval_loss = std::move(interval_loss);
  }
  return model;
}

enum class ExportVectors { input, mean_of_input_and_context };

/// Keyed embedding vectors as read from (or destined for) an embedding file.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::vector<std::string> keys, std::size_t dim, std::vector<double> data)
      : keys_(std::move(keys)), dim_(dim), data_(std::move(data)) {
    if (data_.size() != keys_.size() * dim_) throw DataError("embedding table: shape mismatch");
    for (std::size_t i = 0; i < keys_.size(); ++i) {
      if (!index_.emplace(keys_[i], i).second) {
        throw DataError("embedding table: duplicate key '" + keys_[i] + "'");
      }
    }
  }

  std::size_t size() const { return keys_.size(); }
  std::size_t dim() const { return dim_; }
  const std::vector<std::string>& keys() const { return keys_; }
  const std::string& key(std::size_t i) const { return keys_.at(i); }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }
  std::span<double> row(std::size_t i) { return {data_.data() + i * dim_, dim_}; }
  const std::vector<double>& data() const { return data_; }

  std::optional<std::size_t> find(std::string_view key) const {
    auto it = index_.find(std::string(key));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::vector<double> vector_of(std::string_view key) const {
    auto i = find(key);
    if (!i) throw DataError("unknown entity '" + std::string(key) + "'");
    auto r = row(*i);
    return {r.begin(), r.end()};
  }

  bool operator==(const EmbeddingTable& o) const {
    return keys_ == o.keys_ && dim_ == o.dim_ && data_ == o.data_;
  }

 private:
  std::vector<std::string> keys_;
  std::size_t dim_ = 0;
  std::vector<double> data_;
  std::unordered_map<std::string, std::size_t> index_;
};

inline EmbeddingTable to_table(const EmbeddingModel& m, const Vocabulary& vocab,
                               ExportVectors which = ExportVectors::input) {
  std::vector<double> data(m.size() * m.dim());
  for (EntityId i = 0; i < m.size(); ++i) {
    auto in = m.input(i);
    auto ctx = m.context(i);
    for (std::size_t j = 0; j < m.dim(); ++j) {
      data[i * m.dim() + j] =
          which == ExportVectors::input ? in[j] : 0.5 * (in[j] + ctx[j]);
    }
  }
  return EmbeddingTable(vocab.keys(), m.dim(), std::move(data));
}

inline void write_embeddings(std::ostream& out, const EmbeddingTable& t) {
  out << t.size() << ' ' << t.dim() << '\n';
  for (std::size_t i = 0; i < t.size(); ++i) {
    out << t.key(i);
    for (double x : t.row(i)) out << ' ' << detail::fmt_g(x, 9);
    out << '\n';
  }
}

/// Header `N d`, then `key v1 .. vd` per entity in id order, 9 significant digits.
inline void export_embeddings(std::ostream& out, const EmbeddingModel& m, const Vocabulary& vocab,
                              ExportVectors which = ExportVectors::input) {
  if (auto bad = m.first_non_finite()) {
    throw InvariantError("non-finite embedding value for entity '" + vocab.key(*bad) + "'");
  }
  write_embeddings(out, to_table(m, vocab, which));
}

inline EmbeddingTable read_embeddings(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("embeddings: missing header");
  std::size_t n = 0, d = 0;
  {
    std::istringstream hs(line);
    if (!(hs >> n >> d) || d == 0) throw DataError("embeddings: bad header '" + line + "'");
  }
  std::vector<std::string> keys;
  std::vector<double> data;
  keys.reserve(n);
  data.reserve(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::getline(in, line)) throw DataError("embeddings: expected " + std::to_string(n) + " rows");
    auto f = detail::split(detail::chomp(line), ' ');
    if (f.size() != d + 1) {
      throw DataError("embeddings row " + std::to_string(i + 2) + ": expected " +
                      std::to_string(d + 1) + " fields");
    }
    keys.emplace_back(f[0]);
    for (std::size_t j = 1; j <= d; ++j) {
      double v = 0;
      auto [p, ec] = std::from_chars(f[j].data(), f[j].data() + f[j].size(), v);
      if (ec != std::errc{} || p != f[j].data() + f[j].size()) {
        throw DataError("embeddings row " + std::to_string(i + 2) + ": bad number");
      }
      data.push_back(v);
    }
  }
  return EmbeddingTable(std::move(keys), d, std::move(data));
}

}  // namespace txgraph
