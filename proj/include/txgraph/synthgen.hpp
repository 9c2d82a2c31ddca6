#pragma once

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "txgraph/analysis.hpp"
#include "txgraph/common.hpp"
#include "txgraph/ingest.hpp"

namespace txgraph {

/// Parameters of a synthetic market. The first block mirrors the public
/// knobs; the second block shapes the planted mixture and has working
/// defaults for the desk-scale market.
struct MarketSpec {
  std::size_t n_merchants = 1000;
  std::size_t n_brands = 400;
  std::size_t n_categories = 20;
  std::size_t n_regions = 10;
  std::size_t n_accounts = 5000;
  std::size_t price_tiers = 3;
  double txn_rate = 40.0;  // mean transactions per account
  std::int64_t session_window_seconds = 1800;
  double fraud_merchant_fraction = 0.05;
  double fraud_txn_rate = 0.6;
  std::uint64_t seed = 7;

  std::size_t days = 30;
  double online_brand_fraction = 0.05;
  double compromised_account_fraction = 0.03;
  std::size_t category_groups = 5;  // accounts shop within one group of related categories
  std::size_t categories_per_account = 3;
  double mean_session_size = 5.0;
  double p_session_category = 0.8;  // draw from the session's focus category
  double p_random_category = 0.02;   // draw from any category, at the account's tier
  double p_account_tier = 0.95;
  double p_home_region = 0.9;
  double mean_fraud_sessions = 3.0;

  void validate() const {
    auto need = [](bool ok, const char* flag, const std::string& why) {
      if (!ok) throw UsageError(std::string("--") + flag + ": " + why);
    };
    need(n_merchants >= 1, "merchants", "must be >= 1");
    need(n_categories >= 1, "categories", "must be >= 1");
    need(n_merchants >= n_categories, "categories", "must not exceed --merchants");
    need(n_brands >= n_categories, "brands", "must be >= --categories");
    need(n_brands <= n_merchants, "brands", "must not exceed --merchants");
    need(n_regions >= 1 && n_regions <= 899, "regions", "must be in [1, 899]");
    need(n_accounts >= 1, "accounts", "must be >= 1");
    need(price_tiers >= 2, "tiers", "must be >= 2");
    need(txn_rate >= 1.0, "txn-rate", "must be >= 1");
    need(session_window_seconds >= 1, "session-window", "must be >= 1");
    need(fraud_merchant_fraction >= 0.0 && fraud_merchant_fraction < 1.0, "fraud-merchant-fraction",
         "must be in [0, 1)");
    need(fraud_txn_rate >= 0.0 && fraud_txn_rate < 1.0, "fraud-txn-rate", "must be in [0, 1)");
    need(days >= 1, "days", "must be >= 1");
    need(online_brand_fraction >= 0.0 && online_brand_fraction < 1.0, "online-fraction",
         "must be in [0, 1)");
    need(compromised_account_fraction >= 0.0 && compromised_account_fraction <= 1.0,
         "compromised-fraction", "must be in [0, 1]");
    need(category_groups >= 1 && category_groups <= n_categories, "category-groups",
         "must be in [1, --categories]");
    need(categories_per_account >= 1 && categories_per_account <= n_categories / category_groups,
         "categories-per-account", "must be in [1, --categories / --category-groups]");
    need(mean_session_size >= 1.0, "session-size", "must be >= 1");
    auto prob = [&](double v, const char* flag) { need(v >= 0.0 && v <= 1.0, flag, "must be in [0, 1]"); };
    prob(p_session_category, "p-session-category");
    prob(p_random_category, "p-random-category");
    prob(p_account_tier, "p-account-tier");
    prob(p_home_region, "p-home-region");
    need(p_session_category + p_random_category <= 1.0, "p-random-category",
         "must not exceed 1 - --p-session-category");
    need(mean_fraud_sessions >= 1.0, "fraud-sessions", "must be >= 1");
  }
};

struct MerchantTruth {
  std::string key;  // entity key under the resolution mode the truth is keyed by
  std::size_t category = 0;
  std::size_t region = 0;
  std::size_t tier = 0;
  std::string brand;
  bool fraud = false;
};

struct GroundTruth {
  std::vector<MerchantTruth> merchants;

  const MerchantTruth* find(std::string_view key) const {
    if (index_.empty() && !merchants.empty()) reindex();
    auto it = index_.find(std::string(key));
    return it == index_.end() ? nullptr : &merchants[it->second];
  }

  void reindex() const {
    index_.clear();
    for (std::size_t i = 0; i < merchants.size(); ++i) index_.emplace(merchants[i].key, i);
  }

 private:
  mutable std::unordered_map<std::string, std::size_t> index_;
};

struct Market {
  std::vector<Transaction> transactions;  // sorted by (timestamp, account, merchant)
  GroundTruth truth;                      // keyed by raw_plus_zip entity keys
};

inline constexpr std::int64_t kMarketEpoch = 1'600'041'600;  // a UTC midnight

namespace detail {

inline std::string padded(std::string_view prefix, std::size_t v, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%0*zu", width, v);
  return std::string(prefix) + buf;
}

struct Brand {
  std::string name;
  std::size_t category = 0;
  std::size_t tier = 0;
  bool online = false;
  std::vector<std::size_t> merchants;
};

struct Merchant {
  std::string raw;
  std::string zip;
  std::size_t brand = 0;
  std::size_t region = 0;
  bool fraud = false;
};

struct Session {
  std::int64_t start = 0;
  std::size_t size = 0;
  bool fraud = false;
};

}  // namespace detail

/// Generates a market with planted category, region, tier and fraud structure.
///
/// Each account has a home region, a price tier and a few preferred
/// categories. Shopping happens in sessions whose consecutive transactions
/// are at most a third of the session window apart; sessions are separated
/// by more than two windows. Within a session, merchants are drawn mostly
/// from the session's focus category, the account's tier, and its home
/// region. A small set of compromised accounts additionally runs night-time
/// sessions at fraud-flagged merchants; those transactions are labeled fraud
/// at `fraud_txn_rate`.
inline Market generate_market(const MarketSpec& spec) {
  spec.validate();
  using detail::Brand;
  using detail::Merchant;
  Rng rng(detail::mix_seed(spec.seed, 0));

  // Brands: balanced over categories, tiers cycling within each category.
  std::vector<std::size_t> brand_category(spec.n_brands);
  for (std::size_t b = 0; b < spec.n_brands; ++b) brand_category[b] = b % spec.n_categories;
  rng.shuffle(brand_category.begin(), brand_category.end());
  std::vector<Brand> brands(spec.n_brands);
  std::vector<std::size_t> per_category(spec.n_categories, 0);
  for (std::size_t b = 0; b < spec.n_brands; ++b) {
    auto& br = brands[b];
    br.category = brand_category[b];
    br.tier = per_category[br.category]++ % spec.price_tiers;
    br.online = rng.bernoulli(spec.online_brand_fraction);
    br.name = br.online ? detail::padded("SHOP", b, 3) + ".COM" : detail::padded("BRAND_", b, 3);
  }

  // Merchants: one per brand first, the rest spread over offline brands.
  std::vector<std::size_t> offline_brands;
  for (std::size_t b = 0; b < brands.size(); ++b) {
    if (!brands[b].online) offline_brands.push_back(b);
  }
  std::vector<Merchant> merchants(spec.n_merchants);
  for (std::size_t m = 0; m < spec.n_merchants; ++m) {
    std::size_t b = m < spec.n_brands ? m
                    : offline_brands.empty() ? rng.index(spec.n_brands)
                                             : offline_brands[rng.index(offline_brands.size())];
    auto& mc = merchants[m];
    mc.brand = b;
    brands[b].merchants.push_back(m);
    if (brands[b].online) {
      mc.raw = brands[b].name;
      mc.zip = "00000";
      mc.region = rng.index(spec.n_regions);
    } else {
      mc.region = rng.index(spec.n_regions);
      mc.zip = detail::padded("", 10000 + mc.region * 100 + rng.index(10), 5);
      mc.raw = brands[b].name + " #" + detail::padded("", m, 4);
    }
  }
  std::vector<std::size_t> offline_merchants;
  for (std::size_t m = 0; m < merchants.size(); ++m) {
    if (!brands[merchants[m].brand].online) offline_merchants.push_back(m);
  }
  rng.shuffle(offline_merchants.begin(), offline_merchants.end());
  const auto n_fraud = static_cast<std::size_t>(
      std::llround(spec.fraud_merchant_fraction * static_cast<double>(spec.n_merchants)));
  std::vector<std::size_t> fraud_merchants;
  for (std::size_t i = 0; i < std::min(n_fraud, offline_merchants.size()); ++i) {
    merchants[offline_merchants[i]].fraud = true;
    fraud_merchants.push_back(offline_merchants[i]);
  }
  std::sort(fraud_merchants.begin(), fraud_merchants.end());

  // (category, tier) -> brands
  std::vector<std::vector<std::size_t>> cell(spec.n_categories * spec.price_tiers);
  for (std::size_t b = 0; b < brands.size(); ++b) {
    cell[brands[b].category * spec.price_tiers + brands[b].tier].push_back(b);
  }

  Market market;
  std::vector<std::size_t> cats(spec.n_categories);
  const std::int64_t window = spec.session_window_seconds;
  const std::int64_t max_gap = std::max<std::int64_t>(1, window / 3);

  for (std::size_t a = 0; a < spec.n_accounts; ++a) {
    Rng arng(detail::mix_seed(spec.seed, 1000 + a));
    const std::string account = detail::padded("A", a, 6);
    const std::size_t home = arng.index(spec.n_regions);
    const std::size_t tier = arng.index(spec.price_tiers);
    // Categories c with c % groups == g form group g.
    const std::size_t group = arng.index(spec.category_groups);
    cats.clear();
    for (std::size_t c = group; c < spec.n_categories; c += spec.category_groups) cats.push_back(c);
    for (std::size_t i = 0; i < spec.categories_per_account; ++i) {
      std::swap(cats[i], cats[i + arng.index(cats.size() - i)]);
    }
    std::vector<std::size_t> preferred(cats.begin(),
                                       cats.begin() + static_cast<std::ptrdiff_t>(spec.categories_per_account));
    const bool compromised = !fraud_merchants.empty() && arng.bernoulli(spec.compromised_account_fraction);

    // Session layout.
    std::size_t remaining = 1 + arng.poisson(spec.txn_rate - 1.0);
    std::vector<detail::Session> sessions;
    auto day_time = [&](bool night) {
      std::int64_t day = static_cast<std::int64_t>(arng.index(spec.days));
      double hour = night ? arng.uniform(0.0, 5.0) : arng.uniform(7.0, 22.0);
      return day * 86400 + static_cast<std::int64_t>(hour * 3600.0);
    };
    while (remaining > 0) {
      std::size_t size = std::min(remaining, 1 + arng.poisson(spec.mean_session_size - 1.0));
      sessions.push_back({day_time(false), size, false});
      remaining -= size;
    }
    if (compromised) {
      std::size_t n = 1 + arng.poisson(spec.mean_fraud_sessions - 1.0);
      for (std::size_t s = 0; s < n; ++s) {
        sessions.push_back({day_time(arng.bernoulli(0.6)), 2 + arng.poisson(1.5), true});
      }
    }
    std::sort(sessions.begin(), sessions.end(),
              [](const auto& x, const auto& y) { return x.start < y.start; });

    std::int64_t prev_end = std::numeric_limits<std::int64_t>::min() / 2;
    for (auto& s : sessions) {
      std::int64_t t = std::max(s.start, prev_end + 2 * window + 1);
      const std::size_t focus = preferred[arng.index(preferred.size())];
      for (std::size_t i = 0; i < s.size; ++i) {
        if (i > 0) t += 10 + static_cast<std::int64_t>(arng.index(static_cast<std::size_t>(max_gap)));
        std::size_t m = 0;
        if (s.fraud) {
          m = fraud_merchants[arng.index(fraud_merchants.size())];
        } else {
          std::size_t cat = focus;
          std::size_t tr = arng.bernoulli(spec.p_account_tier) ? tier : arng.index(spec.price_tiers);
          double u = arng.uniform();
          if (u < spec.p_random_category) {
            // Out-of-group draws stay at the account's tier: the only link
            // between groups is price level.
            cat = arng.index(spec.n_categories);
            tr = tier;
          } else if (u >= spec.p_random_category + spec.p_session_category) {
            cat = preferred[arng.index(preferred.size())];
          }
          const auto* candidates = &cell[cat * spec.price_tiers + tr];
          std::vector<std::size_t> fallback;
          if (candidates->empty()) {
            for (std::size_t b = 0; b < brands.size(); ++b) {
              if (brands[b].category == cat) fallback.push_back(b);
            }
            candidates = &fallback;
          }
          const bool local = arng.bernoulli(spec.p_home_region);
          std::vector<std::size_t> options;
          if (local) {
            for (auto b : *candidates) {
              for (auto mm : brands[b].merchants) {
                if (merchants[mm].region == home || brands[b].online) options.push_back(mm);
              }
            }
          }
          if (options.empty()) {
            const auto& br = brands[(*candidates)[arng.index(candidates->size())]];
            m = br.merchants[arng.index(br.merchants.size())];
          } else {
            m = options[arng.index(options.size())];
          }
        }
        const auto& mc = merchants[m];
        const auto& br = brands[mc.brand];
        Transaction txn;
        txn.account_id = account;
        txn.merchant_raw = mc.raw;
        txn.merchant_brand = br.name;
        txn.zip = mc.zip;
        txn.timestamp = kMarketEpoch + t;
        double scale = 15.0 * std::pow(3.0, static_cast<double>(br.tier));
        txn.amount = std::round(scale * std::exp(0.5 * arng.normal()) * (s.fraud ? 2.0 : 1.0) * 100.0) / 100.0;
        txn.channel = br.online ? Channel::online : Channel::offline;
        txn.fraud_label = s.fraud && arng.bernoulli(spec.fraud_txn_rate);
        market.transactions.push_back(std::move(txn));
      }
      prev_end = t;
    }
  }

  std::sort(market.transactions.begin(), market.transactions.end(),
            [](const Transaction& x, const Transaction& y) {
              if (x.timestamp != y.timestamp) return x.timestamp < y.timestamp;
              if (x.account_id != y.account_id) return x.account_id < y.account_id;
              return x.merchant_raw < y.merchant_raw;
            });

  for (const auto& mc : merchants) {
    const auto& br = brands[mc.brand];
    Transaction probe;
    probe.merchant_raw = mc.raw;
    probe.zip = mc.zip;
    market.truth.merchants.push_back({entity_key(probe, EntityResolutionMode::raw_plus_zip),
                                      br.category, mc.region, br.tier, br.name, mc.fraud});
  }
  // Online brands share one key per brand; keep the first.
  std::map<std::string, bool> seen;
  std::erase_if(market.truth.merchants, [&](const MerchantTruth& t) { return !seen.emplace(t.key, true).second; });
  market.truth.reindex();
  return market;
}

inline void write_market(std::ostream& out, const Market& m) {
  write_transactions_header(out);
  for (const auto& t : m.transactions) write_transaction(out, t);
}

inline void write_truth(std::ostream& out, const GroundTruth& truth) {
  out << "entity_key\tcategory\tregion\ttier\tbrand\tfraud_flag\n";
  for (const auto& t : truth.merchants) {
    out << t.key << '\t' << t.category << '\t' << t.region << '\t' << t.tier << '\t' << t.brand
        << '\t' << (t.fraud ? 1 : 0) << '\n';
  }
}

inline GroundTruth read_truth(std::istream& in) {
  GroundTruth truth;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto view = detail::chomp(line);
    if (view.empty() || view.starts_with("entity_key\t")) continue;
    auto f = detail::split(view, '\t');
    if (f.size() != 6) throw DataError("truth line " + std::to_string(line_no) + ": expected 6 fields");
    MerchantTruth t;
    t.key = f[0];
    try {
      t.category = std::stoul(std::string(f[1]));
      t.region = std::stoul(std::string(f[2]));
      t.tier = std::stoul(std::string(f[3]));
    } catch (const std::exception&) {
      throw DataError("truth line " + std::to_string(line_no) + ": bad integer field");
    }
    t.brand = f[4];
    t.fraud = f[5] == "1";
    truth.merchants.push_back(std::move(t));
  }
  truth.reindex();
  return truth;
}

/// Re-keys merchant-level truth for brand-mode embeddings: category, tier and
/// brand are brand attributes; region is the most common franchise region
/// (ties to the smaller id); a brand is fraud-flagged if any franchise is.
inline GroundTruth rollup_truth(const GroundTruth& merchant_truth, EntityResolutionMode mode) {
  if (mode == EntityResolutionMode::raw_plus_zip) return merchant_truth;
  std::map<std::string, std::vector<const MerchantTruth*>> by_brand;
  for (const auto& t : merchant_truth.merchants) by_brand[normalize_key(t.brand)].push_back(&t);
  GroundTruth out;
  for (const auto& [brand, ms] : by_brand) {
    std::map<std::size_t, std::size_t> regions;
    bool fraud = false;
    for (const auto* m : ms) {
      ++regions[m->region];
      fraud = fraud || m->fraud;
    }
    auto best = std::max_element(regions.begin(), regions.end(), [](const auto& x, const auto& y) {
      return x.second < y.second;
    });
    out.merchants.push_back({brand, ms.front()->category, best->first, ms.front()->tier,
                             ms.front()->brand, fraud});
  }
  out.reindex();
  return out;
}

struct PurityStats {
  double mean = 0.0;
  double std_error = 0.0;
};

struct GroundTruthMetrics {
  PurityStats category_purity;
  PurityStats region_purity;
  double tier_direction = 0.0;
  std::vector<std::pair<std::string, std::string>> tier_pairs;  // (high, low)
};

/// Mean fraction of each entity's top-k cosine neighbours sharing `attr`.
template <typename Attr>
PurityStats neighbor_purity(const EmbeddingTable& t, const GroundTruth& truth, std::size_t k,
                            Attr attr) {
  if (t.size() < 2) throw DataError("purity: need at least two entities");
  std::vector<double> values;
  values.reserve(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto* self = truth.find(t.key(i));
    if (!self) throw DataError("ground truth: no attributes for entity '" + t.key(i) + "'");
    std::size_t excl[] = {i};
    auto ns = rank_by_cosine(t, t.row(i), excl, k);
    std::size_t same = 0;
    for (const auto& n : ns) {
      const auto* other = truth.find(n.key);
      if (!other) throw DataError("ground truth: no attributes for entity '" + n.key + "'");
      same += attr(*self) == attr(*other);
    }
    values.push_back(static_cast<double>(same) / static_cast<double>(ns.size()));
  }
  PurityStats s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - s.mean) * (v - s.mean);
  var /= static_cast<double>(values.size() > 1 ? values.size() - 1 : 1);
  s.std_error = std::sqrt(var / static_cast<double>(values.size()));
  return s;
}

/// One (highest-tier, lowest-tier) same-category pair per category, sampled
/// with `seed` among entities present in the table.
inline std::vector<std::pair<std::string, std::string>> sample_tier_pairs(
    const EmbeddingTable& t, const GroundTruth& truth, std::uint64_t seed) {
  std::map<std::size_t, std::vector<const MerchantTruth*>> by_cat;
  std::size_t max_tier = 0;
  for (const auto& k : t.keys()) {
    const auto* m = truth.find(k);
    if (!m) throw DataError("ground truth: no attributes for entity '" + k + "'");
    by_cat[m->category].push_back(m);
    max_tier = std::max(max_tier, m->tier);
  }
  Rng rng(seed);
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [cat, ms] : by_cat) {
    std::vector<const MerchantTruth*> hi, lo;
    for (const auto* m : ms) {
      if (m->tier == max_tier) hi.push_back(m);
      if (m->tier == 0) lo.push_back(m);
    }
    if (hi.empty() || lo.empty()) continue;
    out.emplace_back(hi[rng.index(hi.size())]->key, lo[rng.index(lo.size())]->key);
  }
  return out;
}

inline GroundTruthMetrics ground_truth_metrics(const EmbeddingTable& t, const GroundTruth& truth,
                                               std::uint64_t seed = 0, std::size_t k = 5) {
  GroundTruthMetrics g;
  g.category_purity = neighbor_purity(t, truth, k, [](const MerchantTruth& m) { return m.category; });
  g.region_purity = neighbor_purity(t, truth, k, [](const MerchantTruth& m) { return m.region; });
  g.tier_pairs = sample_tier_pairs(t, truth, seed);
  if (g.tier_pairs.size() >= 2) {
    g.tier_direction = direction_consistency(t, g.tier_pairs).mean_cosine;
  }
  return g;
}

}  // namespace txgraph
