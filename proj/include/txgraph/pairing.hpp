#pragma once

#include <algorithm>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "txgraph/common.hpp"
#include "txgraph/ingest.hpp"

namespace txgraph {

// Which side of the bipartite graph is projected. `account` groups
// transactions by account and pairs merchants; `merchant` groups by merchant
// and pairs accounts.
enum class GroupingKey { account, merchant };

struct PairingConfig {
  std::int64_t window_seconds = 0;  // required, no default
  GroupingKey grouping_key = GroupingKey::account;
  std::size_t max_fanout = 50;

  void validate() const {
    if (window_seconds < 1) throw UsageError("window_seconds must be >= 1");
    if (max_fanout < 1) throw UsageError("max_fanout must be >= 1");
  }
};

/// Unordered co-occurrence; always stored with a <= b.
struct TransactionPair {
  std::string a;
  std::string b;

  TransactionPair() = default;
  TransactionPair(std::string x, std::string y) {
    if (y < x) std::swap(x, y);
    a = std::move(x);
    b = std::move(y);
  }

  auto operator<=>(const TransactionPair&) const = default;
};

/// Time-windowed projection of the transaction table into entity pairs.
///
/// Transactions are grouped by the grouping key and ordered by timestamp
/// (ties broken by the projected entity, so the result does not depend on
/// input order). Each anchor is paired with the following transactions of its
/// group whose timestamp is at most `window_seconds` later, up to
/// `max_fanout` partners. Self-pairs are skipped and duplicates are kept:
/// repetition is the edge weight.
inline std::vector<TransactionPair> generate_pairs(std::span<const ResolvedTransaction> txns,
                                                   const PairingConfig& cfg) {
  cfg.validate();
  const bool by_account = cfg.grouping_key == GroupingKey::account;
  auto group = [&](const ResolvedTransaction& t) -> const std::string& {
    return by_account ? t.account_id : t.entity_key;
  };
  auto item = [&](const ResolvedTransaction& t) -> const std::string& {
    return by_account ? t.entity_key : t.account_id;
  };

  std::vector<std::size_t> order(txns.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    const auto& tx = txns[x];
    const auto& ty = txns[y];
    if (int c = group(tx).compare(group(ty)); c != 0) return c < 0;
    if (tx.timestamp != ty.timestamp) return tx.timestamp < ty.timestamp;
    return item(tx) < item(ty);
  });

  std::vector<TransactionPair> out;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto& anchor = txns[order[i]];
    std::size_t emitted = 0;
    for (std::size_t j = i + 1; j < order.size() && emitted < cfg.max_fanout; ++j) {
      const auto& other = txns[order[j]];
      if (group(other) != group(anchor)) break;
      if (other.timestamp - anchor.timestamp > cfg.window_seconds) break;
      if (item(other) == item(anchor)) continue;
      out.emplace_back(item(anchor), item(other));
      ++emitted;
    }
  }
  return out;
}

struct PairStats {
  std::size_t entities = 0;
  std::size_t edges = 0;
  std::size_t pairs = 0;
  // multiplicity -> number of distinct edges with that multiplicity
  std::map<std::size_t, std::size_t> weight_histogram;

  bool operator==(const PairStats&) const = default;
};

inline PairStats pair_stats(std::span<const TransactionPair> pairs) {
  std::map<std::pair<std::string_view, std::string_view>, std::size_t> weights;
  std::unordered_set<std::string_view> entities;
  for (const auto& p : pairs) {
    ++weights[{p.a, p.b}];
    entities.insert(p.a);
    entities.insert(p.b);
  }
  PairStats s;
  s.entities = entities.size();
  s.edges = weights.size();
  s.pairs = pairs.size();
  for (const auto& [_, w] : weights) ++s.weight_histogram[w];
  return s;
}

inline void write_pairs(std::ostream& out, std::span<const TransactionPair> pairs) {
  for (const auto& p : pairs) out << p.a << '\t' << p.b << '\n';
}

inline std::vector<TransactionPair> read_pairs(std::istream& in) {
  std::vector<TransactionPair> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto view = detail::chomp(line);
    if (view.empty()) continue;
    auto f = detail::split(view, '\t');
    if (f.size() != 2 || f[0].empty() || f[1].empty() || f[0] == f[1]) {
      throw DataError("pairs line " + std::to_string(line_no) + ": expected two distinct keys");
    }
    out.emplace_back(std::string(f[0]), std::string(f[1]));
  }
  return out;
}

}  // namespace txgraph
