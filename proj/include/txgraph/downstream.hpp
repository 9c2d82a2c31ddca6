#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "txgraph/common.hpp"
#include "txgraph/ingest.hpp"
#include "txgraph/sgns.hpp"

namespace txgraph {

enum class FeatureArm { baseline, plus_embeddings, plus_projection };

inline std::string_view to_string(FeatureArm a) {
  switch (a) {
    case FeatureArm::baseline: return "baseline";
    case FeatureArm::plus_embeddings: return "plus_embeddings";
    case FeatureArm::plus_projection: return "plus_projection";
  }
  return "?";
}

inline constexpr std::size_t kBaselineWidth = 3;

struct FeatureRow {
  std::size_t txn = 0;  // index into the transaction sequence
  std::vector<double> features;
  bool label = false;
};

/// Area under the precision-recall curve, step-wise: precision is summed at
/// each recall increment, with tied scores consumed as a single block.
inline double aupr(std::span<const double> scores, const std::vector<bool>& labels) {
  if (scores.size() != labels.size()) throw UsageError("aupr: scores and labels differ in length");
  std::size_t positives = 0;
  for (bool l : labels) positives += l;
  if (positives == 0) throw DataError("aupr: no positive labels");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return scores[x] > scores[y]; });
  double area = 0.0;
  std::size_t tp = 0, seen = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i, block_tp = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) block_tp += labels[order[j++]];
    tp += block_tp;
    seen = j;
    if (block_tp > 0) {
      area += (static_cast<double>(block_tp) / static_cast<double>(positives)) *
              (static_cast<double>(tp) / static_cast<double>(seen));
    }
    i = j;
  }
  return area;
}

// ---------------------------------------------------------------------------
// Merchant-vector scorer: one hidden tanh layer, logistic output.

struct ScorerConfig {
  std::size_t hidden = 8;
  std::size_t epochs = 2000;
  double learning_rate = 50.0;
  std::uint64_t seed = 0;
};

/// One training example per merchant: its vector with transaction and fraud
/// counts. Cross-entropy over transactions aggregates exactly to
/// count-weighted terms per merchant.
struct MerchantExample {
  std::vector<double> x;
  double n = 0.0;
  double positives = 0.0;
};

/// Examples stacked for vectorized passes; rows of `x` are standardized inputs.
struct ScorerBatch {
  Eigen::MatrixXd x;
  Eigen::VectorXd n;
  Eigen::VectorXd positives;
};

inline ScorerBatch make_batch(std::span<const MerchantExample> data) {
  if (data.empty()) throw DataError("scorer: no training examples");
  const auto m = static_cast<Eigen::Index>(data.size());
  const auto d = static_cast<Eigen::Index>(data.front().x.size());
  ScorerBatch b{Eigen::MatrixXd(m, d), Eigen::VectorXd(m), Eigen::VectorXd(m)};
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& ex = data[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < d; ++j) b.x(i, j) = ex.x[static_cast<std::size_t>(j)];
    b.n(i) = ex.n;
    b.positives(i) = ex.positives;
  }
  return b;
}

class MerchantScorer {
 public:
  MerchantScorer() = default;
  MerchantScorer(std::size_t dim, std::size_t hidden)
      : dim_(dim), hidden_(hidden), params_(hidden * dim + 2 * hidden + 1, 0.0),
        mean_(dim, 0.0), scale_(dim, 1.0) {}

  std::size_t dim() const { return dim_; }
  std::size_t hidden() const { return hidden_; }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  // Layout: W1 (hidden x dim, row-major), b1 (hidden), w2 (hidden), b2.
  double& w1(std::size_t h, std::size_t j) { return params_[h * dim_ + j]; }
  double& b1(std::size_t h) { return params_[hidden_ * dim_ + h]; }
  double& w2(std::size_t h) { return params_[hidden_ * dim_ + hidden_ + h]; }
  double& b2() { return params_.back(); }

  void set_standardization(std::vector<double> mean, std::vector<double> scale) {
    mean_ = std::move(mean);
    scale_ = std::move(scale);
  }

  std::vector<double> standardize(std::span<const double> x) const {
    std::vector<double> out(dim_);
    for (std::size_t j = 0; j < dim_; ++j) out[j] = (x[j] - mean_[j]) / scale_[j];
    return out;
  }

  /// Output logit for a raw (unstandardized) vector.
  double logit(std::span<const double> x) const {
    auto z = standardize(x);
    double out = params_.back();
    for (std::size_t k = 0; k < hidden_; ++k) {
      double a = params_[hidden_ * dim_ + k];
      for (std::size_t j = 0; j < dim_; ++j) a += params_[k * dim_ + j] * z[j];
      out += params_[hidden_ * dim_ + hidden_ + k] * std::tanh(a);
    }
    return out;
  }
  double operator()(std::span<const double> x) const { return logistic(logit(x)); }

  /// Mean transaction-level cross-entropy over a batch of standardized inputs.
  double loss(const ScorerBatch& b) const {
    Eigen::MatrixXd h;
    Eigen::VectorXd z = forward(b, h);
    double total = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      total += b.positives(i) * softplus(-z(i)) + (b.n(i) - b.positives(i)) * softplus(z(i));
    }
    return total / b.n.sum();
  }
  double loss(std::span<const MerchantExample> data) const { return loss(make_batch(data)); }

  /// Analytic gradient of loss() with respect to params().
  std::vector<double> gradient(const ScorerBatch& b) const {
    Eigen::MatrixXd h;
    Eigen::VectorXd z = forward(b, h);
    Eigen::VectorXd dz(z.size());
    const double total = b.n.sum();
    for (Eigen::Index i = 0; i < z.size(); ++i) dz(i) = (b.n(i) * logistic(z(i)) - b.positives(i)) / total;

    std::vector<double> g(params_.size(), 0.0);
    const auto hid = static_cast<Eigen::Index>(hidden_), d = static_cast<Eigen::Index>(dim_);
    Eigen::Map<const Eigen::VectorXd> w2(params_.data() + hidden_ * dim_ + hidden_, hid);
    Eigen::MatrixXd da = (dz * w2.transpose()).cwiseProduct((1.0 - h.array().square()).matrix());
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> gw1(g.data(), hid, d);
    gw1 = da.transpose() * b.x;
    Eigen::Map<Eigen::VectorXd>(g.data() + hidden_ * dim_, hid) = da.colwise().sum().transpose();
    Eigen::Map<Eigen::VectorXd>(g.data() + hidden_ * dim_ + hidden_, hid) = h.transpose() * dz;
    g.back() = dz.sum();
    return g;
  }
  std::vector<double> gradient(std::span<const MerchantExample> data) const {
    return gradient(make_batch(data));
  }

 private:
  // Returns output logits; `h` receives hidden activations (examples x hidden).
  Eigen::VectorXd forward(const ScorerBatch& b, Eigen::MatrixXd& h) const {
    const auto hid = static_cast<Eigen::Index>(hidden_), d = static_cast<Eigen::Index>(dim_);
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> w1(
        params_.data(), hid, d);
    Eigen::Map<const Eigen::RowVectorXd> b1(params_.data() + hidden_ * dim_, hid);
    Eigen::Map<const Eigen::VectorXd> w2(params_.data() + hidden_ * dim_ + hidden_, hid);
    h.noalias() = b.x * w1.transpose();
    h.rowwise() += b1;
    h = h.array().tanh().matrix();
    Eigen::VectorXd z = h * w2;
    z.array() += params_.back();
    return z;
  }

  std::size_t dim_ = 0;
  std::size_t hidden_ = 0;
  std::vector<double> params_;
  std::vector<double> mean_;
  std::vector<double> scale_;
};

struct MissingCounter {
  std::size_t rows = 0;  // rows whose merchant had no vector
};

/// Trains the scorer by full-batch gradient descent on the transactions
/// given as (merchant key, fraud label). Merchants without a vector use the
/// zero vector and are counted in `missing`.
inline MerchantScorer project_embedding_score(const EmbeddingTable& table,
                                              std::span<const std::string> merchant_keys,
                                              const std::vector<bool>& labels,
                                              const ScorerConfig& cfg,
                                              MissingCounter* missing = nullptr) {
  if (merchant_keys.size() != labels.size()) throw UsageError("scorer: keys and labels differ in length");
  if (cfg.hidden < 1) throw UsageError("scorer: hidden width must be >= 1");
  const std::size_t d = table.dim();
  std::map<std::string, MerchantExample> agg;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto& ex = agg[merchant_keys[i]];
    ex.n += 1.0;
    ex.positives += labels[i] ? 1.0 : 0.0;
    pos += labels[i];
  }
  if (pos == 0 || pos == labels.size()) throw DataError("scorer: training labels are all one class");

  std::vector<MerchantExample> data;
  data.reserve(agg.size());
  for (auto& [key, ex] : agg) {
    if (auto row = table.find(key)) {
      auto r = table.row(*row);
      ex.x.assign(r.begin(), r.end());
    } else {
      ex.x.assign(d, 0.0);
      if (missing) missing->rows += static_cast<std::size_t>(ex.n);
    }
    data.push_back(std::move(ex));
  }

  std::vector<double> mean(d, 0.0), scale(d, 0.0);
  for (const auto& ex : data) {
    for (std::size_t j = 0; j < d; ++j) mean[j] += ex.x[j];
  }
  for (auto& m : mean) m /= static_cast<double>(data.size());
  for (const auto& ex : data) {
    for (std::size_t j = 0; j < d; ++j) scale[j] += (ex.x[j] - mean[j]) * (ex.x[j] - mean[j]);
  }
  for (auto& s : scale) {
    s = std::sqrt(s / static_cast<double>(data.size()));
    if (s == 0.0) s = 1.0;
  }

  MerchantScorer scorer(d, cfg.hidden);
  scorer.set_standardization(mean, scale);
  for (auto& ex : data) ex.x = scorer.standardize(ex.x);
  const auto batch = make_batch(data);

  Rng rng(cfg.seed);
  for (std::size_t k = 0; k < cfg.hidden; ++k) {
    for (std::size_t j = 0; j < d; ++j) scorer.w1(k, j) = rng.normal() / std::sqrt(static_cast<double>(d));
    scorer.w2(k) = rng.normal() / std::sqrt(static_cast<double>(cfg.hidden));
  }
  const double prevalence = static_cast<double>(pos) / static_cast<double>(labels.size());
  scorer.b2() = std::log(prevalence / (1.0 - prevalence));

  auto& p = scorer.params();
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    auto g = scorer.gradient(batch);
    for (std::size_t i = 0; i < p.size(); ++i) p[i] -= cfg.learning_rate * g[i];
  }
  return scorer;
}

// ---------------------------------------------------------------------------
// Logistic regression on standardized features.

struct ClassifierConfig {
  std::size_t iterations = 1000;
  double learning_rate = 4.0;
};

struct LogisticModel {
  std::vector<double> mean, scale;  // standardization from training rows
  std::vector<double> weights;      // per standardized feature
  double intercept = 0.0;

  double logit(std::span<const double> x) const {
    double z = intercept;
    for (std::size_t j = 0; j < weights.size(); ++j) z += weights[j] * (x[j] - mean[j]) / scale[j];
    return z;
  }
};

/// Full-batch gradient descent on mean log-loss. Weights start at zero and
/// the intercept at the training log-odds, so the fit is deterministic.
inline LogisticModel train_classifier(std::span<const FeatureRow> rows, const ClassifierConfig& cfg = {}) {
  if (rows.empty()) throw DataError("classifier: no training rows");
  const std::size_t w = rows.front().features.size();
  std::size_t pos = 0;
  for (const auto& r : rows) {
    if (r.features.size() != w) throw InvariantError("classifier: feature width differs between rows");
    pos += r.label;
  }
  if (pos == 0 || pos == rows.size()) throw DataError("classifier: training rows contain a single class");
  const double n = static_cast<double>(rows.size());

  LogisticModel m;
  m.mean.assign(w, 0.0);
  m.scale.assign(w, 0.0);
  for (const auto& r : rows) {
    for (std::size_t j = 0; j < w; ++j) m.mean[j] += r.features[j];
  }
  for (auto& v : m.mean) v /= n;
  for (const auto& r : rows) {
    for (std::size_t j = 0; j < w; ++j) {
      double c = r.features[j] - m.mean[j];
      m.scale[j] += c * c;
    }
  }
  for (auto& s : m.scale) {
    s = std::sqrt(s / n);
    if (s == 0.0) s = 1.0;
  }

  // Standardize once; the design matrix is then reused every iteration.
  std::vector<double> x(rows.size() * w);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < w; ++j) x[i * w + j] = (rows[i].features[j] - m.mean[j]) / m.scale[j];
  }
  m.weights.assign(w, 0.0);
  double p0 = static_cast<double>(pos) / n;
  m.intercept = std::log(p0 / (1.0 - p0));

  std::vector<double> grad(w);
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double gb = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const double* xi = &x[i * w];
      double z = m.intercept;
      for (std::size_t j = 0; j < w; ++j) z += m.weights[j] * xi[j];
      double r = logistic(z) - (rows[i].label ? 1.0 : 0.0);
      gb += r;
      for (std::size_t j = 0; j < w; ++j) grad[j] += r * xi[j];
    }
    m.intercept -= cfg.learning_rate * gb / n;
    for (std::size_t j = 0; j < w; ++j) m.weights[j] -= cfg.learning_rate * grad[j] / n;
  }
  return m;
}

// ---------------------------------------------------------------------------
// Features and the lift experiment.

/// Per-transaction baseline features over the whole sequence: amount, hour
/// of day, and how many transactions the account made before this one.
inline std::vector<std::array<double, kBaselineWidth>> baseline_features(std::span<const Transaction> txns) {
  std::vector<std::size_t> order(txns.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return txns[x].timestamp < txns[y].timestamp; });
  std::unordered_map<std::string, std::size_t> seen;
  std::vector<std::array<double, kBaselineWidth>> out(txns.size());
  for (auto i : order) {
    const auto& t = txns[i];
    auto& c = seen[t.account_id];
    out[i] = {t.amount, static_cast<double>((t.timestamp % 86400) / 3600), static_cast<double>(c)};
    ++c;
  }
  return out;
}

inline constexpr std::size_t kNoVector = static_cast<std::size_t>(-1);

/// Embedding-table row of each transaction's merchant, or kNoVector.
inline std::vector<std::size_t> merchant_slots(std::span<const Transaction> txns,
                                               const EmbeddingTable& table, EntityResolutionMode mode) {
  std::vector<std::size_t> slots(txns.size(), kNoVector);
  for (std::size_t i = 0; i < txns.size(); ++i) {
    if (auto r = table.find(entity_key(txns[i], mode))) slots[i] = *r;
  }
  return slots;
}

/// Builds one row per labeled transaction in `subset`. Embedding arms read
/// transaction i's vector from row `slots[i]` of `table`; a missing vector
/// becomes the zero vector and is counted. The projection arm appends the
/// scorer's logit, a monotone transform of its score.
inline std::vector<FeatureRow> build_features(std::span<const Transaction> txns,
                                              std::span<const std::size_t> subset,
                                              const EmbeddingTable* table,
                                              std::span<const std::size_t> slots, FeatureArm arm,
                                              const MerchantScorer* scorer = nullptr,
                                              MissingCounter* missing = nullptr) {
  if (arm != FeatureArm::baseline && (!table || slots.size() != txns.size())) {
    throw UsageError("features: embedding arm needs embeddings for every transaction slot");
  }
  if (arm == FeatureArm::plus_projection && !scorer) throw UsageError("features: projection arm needs a scorer");
  auto base = baseline_features(txns);
  std::vector<FeatureRow> rows;
  const std::vector<double> zero(table ? table->dim() : 0, 0.0);
  for (auto i : subset) {
    const auto& t = txns[i];
    if (!t.fraud_label) continue;
    FeatureRow r;
    r.txn = i;
    r.label = *t.fraud_label;
    r.features.assign(base[i].begin(), base[i].end());
    if (arm != FeatureArm::baseline) {
      std::span<const double> v = zero;
      if (slots[i] != kNoVector) {
        v = table->row(slots[i]);
      } else if (missing) {
        ++missing->rows;
      }
      if (arm == FeatureArm::plus_embeddings) {
        r.features.insert(r.features.end(), v.begin(), v.end());
      } else {
        r.features.push_back(scorer->logit(v));
      }
    }
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw DataError("features: no labeled rows");
  return rows;
}

/// All labeled transactions, merchants looked up by entity key.
inline std::vector<FeatureRow> build_features(std::span<const Transaction> txns,
                                              const EmbeddingTable* table, EntityResolutionMode mode,
                                              FeatureArm arm, const MerchantScorer* scorer = nullptr,
                                              MissingCounter* missing = nullptr) {
  std::vector<std::size_t> all(txns.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::vector<std::size_t> slots;
  if (table) slots = merchant_slots(txns, *table, mode);
  return build_features(txns, all, table, slots, arm, scorer, missing);
}

struct ChronoSplit {
  std::vector<std::size_t> train, test;  // transaction indices
};

/// First `train_fraction` of transactions by timestamp train, the rest test.
/// Rows sharing the boundary timestamp all go to the training side.
inline ChronoSplit chronological_split(std::span<const Transaction> txns, double train_fraction = 0.8) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw UsageError("train fraction must be in (0, 1)");
  std::vector<std::size_t> order(txns.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return txns[x].timestamp < txns[y].timestamp; });
  auto cut = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(order.size())));
  while (cut > 0 && cut < order.size() && txns[order[cut]].timestamp == txns[order[cut - 1]].timestamp) ++cut;
  ChronoSplit s;
  s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(cut));
  s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(cut), order.end());
  return s;
}

struct LiftConfig {
  EntityResolutionMode mode = EntityResolutionMode::raw_plus_zip;
  double train_fraction = 0.8;
  ScorerConfig scorer;
  ClassifierConfig classifier;
  std::uint64_t seed = 0;
};

struct LiftReport {
  double aupr_baseline = 0.0;
  double aupr_emb = 0.0;
  double aupr_proj = 0.0;
  double delta_emb_pct = 0.0;
  double delta_proj_pct = 0.0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::size_t n_train_pos = 0;
  std::size_t n_test_pos = 0;
  std::size_t missing_rows = 0;  // labeled test+train rows whose merchant had no vector
  std::uint64_t seed = 0;
  LiftConfig config;
  // Test-row labels and per-arm scores, kept for resampling.
  std::vector<bool> test_labels;
  std::vector<double> test_baseline, test_emb, test_proj;
};

inline double percent_delta(double arm, double baseline) { return 100.0 * (arm - baseline) / baseline; }

inline std::vector<double> score_rows(const LogisticModel& m, std::span<const FeatureRow> rows) {
  std::vector<double> s;
  s.reserve(rows.size());
  for (const auto& r : rows) s.push_back(m.logit(r.features));
  return s;
}

/// Lift experiment over explicit per-transaction vector slots.
inline LiftReport lift_experiment(std::span<const Transaction> txns, const EmbeddingTable& table,
                                  std::span<const std::size_t> slots, const LiftConfig& cfg) {
  auto split = chronological_split(txns, cfg.train_fraction);
  LiftReport rep;
  rep.seed = cfg.seed;
  rep.config = cfg;

  // The scorer sees training transactions only; a missing vector gets a key
  // that is absent from the table.
  std::vector<std::string> keys;
  std::vector<bool> labels;
  const std::string absent = "\x01missing";
  for (auto i : split.train) {
    if (!txns[i].fraud_label) continue;
    keys.push_back(slots[i] == kNoVector ? absent : table.key(slots[i]));
    labels.push_back(*txns[i].fraud_label);
  }
  auto scfg = cfg.scorer;
  scfg.seed = detail::mix_seed(cfg.seed, 3);
  auto scorer = project_embedding_score(table, keys, labels, scfg);

  MissingCounter missing;
  auto fit = [&](FeatureArm arm, std::vector<double>& test_scores) {
    MissingCounter* mc = arm == FeatureArm::plus_embeddings ? &missing : nullptr;
    auto train_rows = build_features(txns, split.train, &table, slots, arm, &scorer, mc);
    auto test_rows = build_features(txns, split.test, &table, slots, arm, &scorer, mc);
    auto model = train_classifier(train_rows, cfg.classifier);
    test_scores = score_rows(model, test_rows);
    if (rep.test_labels.empty()) {
      rep.n_train = train_rows.size();
      rep.n_test = test_rows.size();
      for (const auto& r : train_rows) rep.n_train_pos += r.label;
      for (const auto& r : test_rows) rep.test_labels.push_back(r.label);
      for (bool l : rep.test_labels) rep.n_test_pos += l;
    }
    return aupr(test_scores, rep.test_labels);
  };
  rep.aupr_baseline = fit(FeatureArm::baseline, rep.test_baseline);
  rep.aupr_emb = fit(FeatureArm::plus_embeddings, rep.test_emb);
  rep.aupr_proj = fit(FeatureArm::plus_projection, rep.test_proj);
  rep.missing_rows = missing.rows;
  rep.delta_emb_pct = percent_delta(rep.aupr_emb, rep.aupr_baseline);
  rep.delta_proj_pct = percent_delta(rep.aupr_proj, rep.aupr_baseline);
  return rep;
}

/// Trains the three arms on the same chronological training rows and scores
/// the same test rows; merchants are looked up in `table` by entity key.
inline LiftReport lift_experiment(std::span<const Transaction> txns, const EmbeddingTable& table,
                                  const LiftConfig& cfg) {
  return lift_experiment(txns, table, merchant_slots(txns, table, cfg.mode), cfg);
}

/// No-signal control: a table of `rows` standard-normal vectors of width
/// `dim`, with each transaction assigned a uniformly random row. Neither the
/// vectors nor the assignment depend on the merchant or the label.
inline LiftReport noise_lift_experiment(std::span<const Transaction> txns, std::size_t rows,
                                        std::size_t dim, const LiftConfig& cfg,
                                        std::uint64_t noise_seed) {
  if (rows < 1 || dim < 1) throw UsageError("noise control: table shape must be positive");
  Rng rng(noise_seed);
  std::vector<std::string> keys(rows);
  std::vector<double> data(rows * dim);
  for (std::size_t i = 0; i < rows; ++i) {
    keys[i] = "noise" + std::to_string(i);
    for (std::size_t j = 0; j < dim; ++j) data[i * dim + j] = rng.normal();
  }
  std::vector<std::size_t> slots(txns.size());
  for (auto& s : slots) s = rng.index(rows);
  EmbeddingTable noise(std::move(keys), dim, std::move(data));
  return lift_experiment(txns, noise, slots, cfg);
}

/// Paired bootstrap standard error of aupr(arm) - aupr(baseline) over test rows.
inline double bootstrap_delta_se(const std::vector<bool>& labels, std::span<const double> baseline,
                                 std::span<const double> arm, std::size_t resamples, std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t n = labels.size();
  std::vector<double> diffs;
  std::vector<bool> l(n);
  std::vector<double> b(n), a(n);
  while (diffs.size() < resamples) {
    std::size_t pos = 0;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t k = rng.index(n);
      l[i] = labels[k];
      b[i] = baseline[k];
      a[i] = arm[k];
      pos += l[i];
    }
    if (pos == 0) continue;
    diffs.push_back(aupr(a, l) - aupr(b, l));
  }
  double mean = std::accumulate(diffs.begin(), diffs.end(), 0.0) / static_cast<double>(diffs.size());
  double var = 0.0;
  for (double d : diffs) var += (d - mean) * (d - mean);
  return std::sqrt(var / static_cast<double>(diffs.size() - 1));
}

inline void write_lift_report(std::ostream& out, const LiftReport& r) {
  using detail::fmt_f;
  out << "aupr_baseline=" << fmt_f(r.aupr_baseline, 4) << '\n'
      << "aupr_emb=" << fmt_f(r.aupr_emb, 4) << '\n'
      << "aupr_proj=" << fmt_f(r.aupr_proj, 4) << '\n'
      << "delta_emb_pct=" << fmt_f(r.delta_emb_pct, 2) << '\n'
      << "delta_proj_pct=" << fmt_f(r.delta_proj_pct, 2) << '\n'
      << "n_train=" << r.n_train << '\n'
      << "n_test=" << r.n_test << '\n'
      << "n_train_pos=" << r.n_train_pos << '\n'
      << "n_test_pos=" << r.n_test_pos << '\n'
      << "missing_rows=" << r.missing_rows << '\n'
      << "seed=" << r.seed << '\n'
      << "mode=" << to_string(r.config.mode) << '\n'
      << "train_fraction=" << detail::fmt_g(r.config.train_fraction, 6) << '\n'
      << "hidden=" << r.config.scorer.hidden << '\n'
      << "scorer_epochs=" << r.config.scorer.epochs << '\n'
      << "scorer_lr=" << detail::fmt_g(r.config.scorer.learning_rate, 6) << '\n'
      << "classifier_iterations=" << r.config.classifier.iterations << '\n'
      << "classifier_lr=" << detail::fmt_g(r.config.classifier.learning_rate, 6) << '\n';
}

}  // namespace txgraph
