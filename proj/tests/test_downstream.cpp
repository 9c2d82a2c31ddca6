#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "oracles.hpp"
#include "test_util.hpp"
#include "txgraph/downstream.hpp"
#include "txgraph/eval.hpp"
#include "txgraph/synthgen.hpp"

using namespace txgraph;

namespace {

Transaction txn(std::string acct, std::string raw, std::int64_t ts, double amount, bool fraud) {
  Transaction t;
  t.account_id = std::move(acct);
  t.merchant_raw = std::move(raw);
  t.zip = "00001";
  t.timestamp = ts;
  t.amount = amount;
  t.fraud_label = fraud;
  return t;
}

EmbeddingTable random_table(std::size_t n, std::size_t d, std::uint64_t seed,
                            const std::string& prefix = "m") {
  Rng rng(seed);
  std::vector<std::string> keys;
  std::vector<double> data;
  for (std::size_t i = 0; i < n; ++i) {
    keys.push_back(prefix + std::to_string(i));
    for (std::size_t j = 0; j < d; ++j) data.push_back(rng.normal());
  }
  return EmbeddingTable(keys, d, data);
}

std::vector<FeatureRow> random_rows(std::size_t n, std::size_t w, double signal, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<FeatureRow> rows(n);
  for (std::size_t i = 0; i < n; ++i) {
    rows[i].txn = i;
    rows[i].label = rng.bernoulli(0.2);
    for (std::size_t j = 0; j < w; ++j) {
      rows[i].features.push_back(rng.normal() * (1 + j) + 3 * j + (j == 0 && rows[i].label ? signal : 0.0));
    }
  }
  return rows;
}

// Bootstrap standard error of aupr over resampled test rows.
double aupr_se(const std::vector<double>& s, const std::vector<bool>& l, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> vals;
  std::vector<double> bs(s.size());
  std::vector<bool> bl(s.size());
  while (vals.size() < 300) {
    std::size_t pos = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      auto k = rng.index(s.size());
      bs[i] = s[k];
      bl[i] = l[k];
      pos += bl[i];
    }
    if (pos) vals.push_back(aupr(bs, bl));
  }
  double mean = std::accumulate(vals.begin(), vals.end(), 0.0) / double(vals.size());
  double var = 0;
  for (double v : vals) var += (v - mean) * (v - mean);
  return std::sqrt(var / double(vals.size() - 1));
}

const Market& small_market() {
  static const Market m = [] {
    MarketSpec s;
    s.n_accounts = 3000;
    s.seed = 12;
    return generate_market(s);
  }();
  return m;
}

const EmbeddingTable& small_market_table() {
  static const EmbeddingTable t = [] {
    auto res = resolve_entities(small_market().transactions, EntityResolutionMode::raw_plus_zip);
    PairingConfig pc;
    pc.window_seconds = 1800;
    TrainConfig cfg;
    return train_embeddings(generate_pairs(res, pc), cfg);
  }();
  return t;
}

}  // namespace

TEST(Aupr, PerfectRanking) {
  std::vector<double> s = {0.9, 0.8, 0.2, 0.1};
  std::vector<bool> l = {true, true, false, false};
  EXPECT_DOUBLE_EQ(aupr(s, l), 1.0);
}

TEST(Aupr, ConstantScoresGivePrevalence) {
  std::vector<double> s(40, 0.3);
  std::vector<bool> l(40, false);
  for (int i = 0; i < 7; ++i) l[static_cast<std::size_t>(i * 5)] = true;
  EXPECT_EQ(aupr(s, l), 7.0 / 40.0);
}

TEST(Aupr, MatchesAllThresholdsOracle) {
  Rng rng(31);
  for (int t = 0; t < 20; ++t) {
    std::vector<bool> l(500);
    for (std::size_t i = 0; i < 500; ++i) l[i] = rng.bernoulli(0.15);
    l[0] = true;
    auto s = oracle::random_scores(rng, 500, 0.0);
    for (std::size_t i = 0; i < 500; ++i) if (l[i]) s[i] += 0.7;
    EXPECT_NEAR(aupr(s, l), oracle::aupr_all_thresholds(s, l), 1e-9);
  }
}

TEST(Aupr, InvariantUnderMonotoneTransform) {
  Rng rng(32);
  std::vector<double> s(300);
  std::vector<bool> l(300);
  for (std::size_t i = 0; i < 300; ++i) {
    l[i] = rng.bernoulli(0.3);
    s[i] = rng.normal() + (l[i] ? 0.5 : 0.0);
  }
  std::vector<double> t;
  for (double x : s) t.push_back(std::atan(x) * 5 - 2);
  EXPECT_NEAR(aupr(s, l), aupr(t, l), 1e-15);
}

TEST(Aupr, Errors) {
  std::vector<double> s = {1, 2};
  std::vector<bool> none = {false, false}, short_l = {true};
  EXPECT_THROW(aupr(s, none), DataError);
  EXPECT_THROW(aupr(s, short_l), UsageError);
}

TEST(Features, ArmWidths) {
  std::vector<Transaction> txns = {txn("a", "m0", 100, 5, false), txn("a", "m1", 200, 7, true)};
  auto table = random_table(2, 16, 1);
  std::vector<std::string> keys = {"m0|00001", "m1|00001"};
  EmbeddingTable keyed(keys, 16, table.data());
  std::vector<std::string> train_keys = {"m0|00001", "m1|00001"};
  std::vector<bool> labels = {false, true};
  ScorerConfig sc;
  sc.epochs = 5;
  auto scorer = project_embedding_score(keyed, train_keys, labels, sc);
  auto mode = EntityResolutionMode::raw_plus_zip;
  EXPECT_EQ(build_features(txns, &keyed, mode, FeatureArm::baseline)[0].features.size(), 3u);
  EXPECT_EQ(build_features(txns, &keyed, mode, FeatureArm::plus_embeddings)[0].features.size(), 19u);
  EXPECT_EQ(build_features(txns, &keyed, mode, FeatureArm::plus_projection, &scorer)[0].features.size(), 4u);
  EXPECT_THROW(build_features(txns, &keyed, mode, FeatureArm::plus_projection), UsageError);
  EXPECT_THROW(build_features(txns, nullptr, mode, FeatureArm::plus_embeddings), UsageError);
}

TEST(Features, BaselineValues) {
  std::vector<Transaction> txns = {txn("a", "m", 7200 + 30, 5, false), txn("b", "m", 10, 3, false),
                                   txn("a", "m", 50, 9, true), txn("a", "m", 86400 + 3600 * 23, 1, false)};
  auto f = baseline_features(txns);
  EXPECT_EQ(f[0][0], 5.0);
  EXPECT_EQ(f[0][1], 2.0);
  EXPECT_EQ(f[0][2], 1.0);
  EXPECT_EQ(f[1][2], 0.0);
  EXPECT_EQ(f[2][2], 0.0);
  EXPECT_EQ(f[3][1], 23.0);
  EXPECT_EQ(f[3][2], 2.0);
}

TEST(Features, UnlabeledSkippedAndMissingCounted) {
  std::vector<Transaction> txns = {txn("a", "known", 1, 5, false), txn("a", "unknown", 2, 5, true),
                                   txn("a", "known", 3, 5, false)};
  txns[2].fraud_label.reset();
  EmbeddingTable table({"known|00001"}, 2, {1.0, 2.0});
  MissingCounter missing;
  auto rows = build_features(txns, &table, EntityResolutionMode::raw_plus_zip,
                             FeatureArm::plus_embeddings, nullptr, &missing);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(missing.rows, 1u);
  EXPECT_EQ(rows[1].features[3], 0.0);
  EXPECT_EQ(rows[1].features[4], 0.0);
  txns[0].fraud_label.reset();
  txns[1].fraud_label.reset();
  EXPECT_THROW(build_features(txns, &table, EntityResolutionMode::raw_plus_zip, FeatureArm::baseline),
               DataError);
}

TEST(ChronoSplit, TrainBeforeTest) {
  Rng rng(4);
  std::vector<Transaction> txns;
  for (int i = 0; i < 1000; ++i)
    txns.push_back(txn("a", "m", static_cast<std::int64_t>(rng.index(300)), 1, false));
  auto s = chronological_split(txns, 0.8);
  EXPECT_EQ(s.train.size() + s.test.size(), 1000u);
  EXPECT_GE(s.train.size(), 800u);
  std::int64_t max_train = 0, min_test = 1 << 30;
  for (auto i : s.train) max_train = std::max(max_train, txns[i].timestamp);
  for (auto i : s.test) min_test = std::min(min_test, txns[i].timestamp);
  EXPECT_LT(max_train, min_test);
  EXPECT_THROW(chronological_split(txns, 1.0), UsageError);
}

TEST(Scorer, GradientMatchesFiniteDifferences) {
  Rng rng(8);
  for (int inst = 0; inst < 20; ++inst) {
    const std::size_t d = 6, h = 4;
    MerchantScorer s(d, h);
    for (auto& p : s.params()) p = rng.normal() * 0.7;
    std::vector<MerchantExample> data(15);
    for (auto& ex : data) {
      for (std::size_t j = 0; j < d; ++j) ex.x.push_back(rng.normal());
      ex.n = 1 + static_cast<double>(rng.index(20));
      ex.positives = static_cast<double>(rng.index(static_cast<std::size_t>(ex.n) + 1));
    }
    auto g = s.gradient(data);
    auto& p = s.params();
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double saved = p[i];
      p[i] = saved + 1e-5;
      const double up = s.loss(data);
      p[i] = saved - 1e-5;
      const double down = s.loss(data);
      p[i] = saved;
      EXPECT_LT(oracle::rel_error(g[i], (up - down) / 2e-5), 1e-5) << "param " << i;
    }
  }
}

TEST(Scorer, SeparableMerchantsAreLearned) {
  auto table = random_table(200, 8, 9);
  std::vector<std::string> keys;
  std::vector<bool> labels;
  for (std::size_t i = 0; i < 200; ++i) {
    const bool fraud = table.row(i)[0] + table.row(i)[1] > 0.0;
    for (int r = 0; r < 5; ++r) {
      keys.push_back(table.key(i));
      labels.push_back(fraud);
    }
  }
  auto scorer = project_embedding_score(table, keys, labels, ScorerConfig{});
  std::size_t correct = 0;
  for (std::size_t i = 0; i < 200; ++i) {
    const bool fraud = table.row(i)[0] + table.row(i)[1] > 0.0;
    correct += (scorer(table.row(i)) > 0.5) == fraud;
  }
  EXPECT_GT(double(correct) / 200.0, 0.95);
}

TEST(Scorer, UntrainedDependsOnlyOnInitialization) {
  auto table = random_table(300, 8, 10);
  std::vector<std::string> keys(table.keys().begin(), table.keys().begin() + 200);
  ScorerConfig cfg;
  cfg.epochs = 0;
  double auc_sum = 0;
  const int seeds = 30;
  for (int sd = 0; sd < seeds; ++sd) {
    cfg.seed = static_cast<std::uint64_t>(sd);
    std::vector<bool> l1(200), l2(200);
    for (std::size_t i = 0; i < 200; ++i) {
      l1[i] = table.row(i)[0] > 0;
      l2[i] = (i % 2) == 0;
    }
    auto s1 = project_embedding_score(table, keys, l1, cfg);
    auto s2 = project_embedding_score(table, keys, l2, cfg);
    const double shift = s1.logit(table.row(250)) - s2.logit(table.row(250));
    std::vector<double> pos, neg;
    for (std::size_t i = 200; i < 300; ++i) {
      EXPECT_NEAR(s1.logit(table.row(i)) - s2.logit(table.row(i)), shift, 1e-9);
      (table.row(i)[0] > 0 ? pos : neg).push_back(s1.logit(table.row(i)));
    }
    auc_sum += link_prediction_auc(pos, neg);
  }
  EXPECT_NEAR(auc_sum / seeds, 0.5, 0.1);
}

TEST(Scorer, SingleClassIsError) {
  auto table = random_table(3, 2, 1);
  std::vector<std::string> keys = {"m0", "m1"};
  std::vector<bool> labels = {false, false};
  EXPECT_THROW(project_embedding_score(table, keys, labels, ScorerConfig{}), DataError);
}

TEST(Classifier, SeparableRowsGivePerfectHeldOutAupr) {
  auto train = random_rows(400, 3, 50.0, 1);
  auto test = random_rows(200, 3, 50.0, 2);
  auto m = train_classifier(train);
  std::vector<bool> l;
  for (const auto& r : test) l.push_back(r.label);
  EXPECT_NEAR(aupr(score_rows(m, test), l), 1.0, 1e-12);
}

TEST(Classifier, RandomFeaturesNearPrevalence) {
  auto train = random_rows(2000, 3, 0.0, 3);
  auto test = random_rows(2000, 3, 0.0, 4);
  auto m = train_classifier(train);
  std::vector<bool> l;
  double pos = 0;
  for (const auto& r : test) {
    l.push_back(r.label);
    pos += r.label;
  }
  auto s = score_rows(m, test);
  EXPECT_LE(std::abs(aupr(s, l) - pos / 2000.0), 3 * aupr_se(s, l, 5));
}

// Reference optimiser: the same objective and budget written with Eigen
// matrix algebra on its own standardisation.
TEST(Classifier, MatchesBatchGradientDescentOracle) {
  auto rows = random_rows(500, 4, 1.0, 6);
  ClassifierConfig cfg;
  cfg.iterations = 300;
  cfg.learning_rate = 2.0;
  auto m = train_classifier(rows, cfg);

  const Eigen::Index n = 500, w = 4;
  Eigen::MatrixXd x(n, w);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < w; ++j) x(i, j) = rows[static_cast<std::size_t>(i)].features[static_cast<std::size_t>(j)];
    y(i) = rows[static_cast<std::size_t>(i)].label ? 1.0 : 0.0;
  }
  Eigen::RowVectorXd mu = x.colwise().mean();
  Eigen::MatrixXd c = x.rowwise() - mu;
  Eigen::RowVectorXd sd = (c.array().square().colwise().sum() / double(n)).sqrt();
  Eigen::MatrixXd z = c.array().rowwise() / sd.array();
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(w);
  const double prev = y.mean();
  double b0 = std::log(prev / (1 - prev));
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    Eigen::VectorXd p = ((-(z * beta).array() - b0).exp() + 1.0).inverse();
    Eigen::VectorXd r = p - y;
    b0 -= cfg.learning_rate * r.sum() / double(n);
    beta -= cfg.learning_rate * z.transpose() * r / double(n);
  }
  EXPECT_NEAR(m.intercept, b0, 1e-6);
  for (Eigen::Index j = 0; j < w; ++j) {
    EXPECT_NEAR(m.weights[static_cast<std::size_t>(j)], beta(j), 1e-6);
    EXPECT_NEAR(m.mean[static_cast<std::size_t>(j)], mu(j), 1e-9);
  }
}

TEST(Classifier, Errors) {
  std::vector<FeatureRow> none;
  EXPECT_THROW(train_classifier(none), DataError);
  auto rows = random_rows(10, 2, 0, 1);
  for (auto& r : rows) r.label = false;
  EXPECT_THROW(train_classifier(rows), DataError);
}

TEST(Lift, DeterministicReport) {
  LiftConfig cfg;
  cfg.scorer.epochs = 200;
  cfg.classifier.iterations = 200;
  auto a = lift_experiment(small_market().transactions, small_market_table(), cfg);
  auto b = lift_experiment(small_market().transactions, small_market_table(), cfg);
  std::ostringstream ra, rb;
  write_lift_report(ra, a);
  write_lift_report(rb, b);
  EXPECT_EQ(ra.str(), rb.str());
  EXPECT_NE(ra.str().find("aupr_proj="), std::string::npos);
  EXPECT_NE(ra.str().find("delta_emb_pct="), std::string::npos);
  EXPECT_EQ(a.n_test_pos, static_cast<std::size_t>(std::count(a.test_labels.begin(), a.test_labels.end(), true)));
  EXPECT_NEAR(a.delta_proj_pct, 100 * (a.aupr_proj - a.aupr_baseline) / a.aupr_baseline, 1e-12);
}

// With training labels permuted, no arm can beat a random ranking of the
// test rows by more than sampling noise.
TEST(Lift, LabelShuffledControlAtPrevalence) {
  auto txns = small_market().transactions;
  auto split = chronological_split(txns, 0.8);
  std::vector<bool> labels;
  for (auto i : split.train) labels.push_back(*txns[i].fraud_label);
  Rng rng(77);
  rng.shuffle(labels.begin(), labels.end());
  for (std::size_t k = 0; k < split.train.size(); ++k) txns[split.train[k]].fraud_label = labels[k];

  LiftConfig cfg;
  cfg.scorer.epochs = 500;
  auto rep = lift_experiment(txns, small_market_table(), cfg);
  const double prevalence = double(rep.n_test_pos) / double(rep.n_test);
  for (const auto* s : {&rep.test_baseline, &rep.test_emb, &rep.test_proj}) {
    const double a = aupr(*s, rep.test_labels);
    EXPECT_LE(std::abs(a - prevalence), 3 * aupr_se(*s, rep.test_labels, 9))
        << "aupr " << a << " prevalence " << prevalence;
  }
}

TEST(Lift, BootstrapSeIsPositiveAndSeeded) {
  Rng rng(3);
  std::vector<bool> l(300);
  std::vector<double> a(300), b(300);
  for (std::size_t i = 0; i < 300; ++i) {
    l[i] = rng.bernoulli(0.2);
    a[i] = rng.normal() + l[i];
    b[i] = rng.normal();
  }
  const double se = bootstrap_delta_se(l, b, a, 200, 1);
  EXPECT_GT(se, 0.0);
  EXPECT_EQ(se, bootstrap_delta_se(l, b, a, 200, 1));
}
