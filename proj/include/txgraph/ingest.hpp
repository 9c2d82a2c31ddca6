#pragma once

#include <array>
#include <charconv>
#include <cctype>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "txgraph/common.hpp"

namespace txgraph {

enum class Channel { online, offline };

inline std::string_view to_string(Channel c) {
  return c == Channel::online ? "online" : "offline";
}

struct Transaction {
  std::string account_id;
  std::string merchant_raw;
  std::string merchant_brand;
  std::string zip;
  std::int64_t timestamp = 0;
  double amount = 0.0;
  Channel channel = Channel::offline;
  std::optional<bool> fraud_label;

  bool operator==(const Transaction&) const = default;
};

enum class EntityResolutionMode { raw_plus_zip, brand };

inline std::string_view to_string(EntityResolutionMode m) {
  return m == EntityResolutionMode::brand ? "brand" : "raw";
}

struct ResolvedTransaction {
  std::string account_id;
  std::string entity_key;
  std::int64_t timestamp = 0;
  Channel channel = Channel::offline;

  bool operator==(const ResolvedTransaction&) const = default;
};

inline constexpr std::string_view kTransactionsHeader =
    "account_id,merchant_raw,merchant_brand,zip,timestamp,amount,channel,fraud_label";

struct RecordError {
  std::size_t line = 0;
  std::string message;
};

struct ReaderOptions {
  // Number of malformed rows tolerated before the read aborts.
  std::size_t max_errors = 0;
};

/// Streaming reader over the transactions CSV format.
///
/// Rows are decoded one at a time; memory use does not depend on file size.
/// The header is parsed by column name, so `channel` and `fraud_label` may be
/// absent. Without a channel column, merchants whose raw name ends in ".com"
/// (case-insensitive) are classified online.
class TransactionReader {
 public:
  explicit TransactionReader(std::istream& in, ReaderOptions opts = {})
      : in_(in), opts_(opts) {
    read_header();
  }

  /// Next well-formed row, or nullopt at end of input. Throws DataError once
  /// the malformed-row count exceeds `max_errors`.
  std::optional<Transaction> next() {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      auto view = detail::chomp(line);
      if (view.empty()) continue;
      std::string why;
      if (auto t = decode(view, why)) return t;
      errors_.push_back({line_no_, why});
      if (errors_.size() > opts_.max_errors) {
        throw DataError("transactions line " + std::to_string(line_no_) + ": " + why);
      }
    }
    return std::nullopt;
  }

  const std::vector<RecordError>& errors() const { return errors_; }
  bool has_channel_column() const { return col_[kChannel] >= 0; }

 private:
  enum Column { kAccount, kRaw, kBrand, kZip, kTimestamp, kAmount, kChannel, kFraud, kColumns };

  void read_header() {
    std::string line;
    if (!std::getline(in_, line)) throw DataError("transactions: missing header row");
    ++line_no_;
    static constexpr std::array<std::string_view, kColumns> names = {
        "account_id", "merchant_raw", "merchant_brand", "zip",
        "timestamp",  "amount",       "channel",        "fraud_label"};
    col_.fill(-1);
    auto fields = detail::split(detail::chomp(line), ',');
    ncols_ = fields.size();
    for (std::size_t i = 0; i < fields.size(); ++i) {
      for (std::size_t c = 0; c < kColumns; ++c) {
        if (fields[i] == names[c]) col_[c] = static_cast<int>(i);
      }
    }
    for (std::size_t c = 0; c <= kAmount; ++c) {
      if (col_[c] < 0) {
        throw DataError("transactions header: missing column '" + std::string(names[c]) + "'");
      }
    }
  }

  std::optional<Transaction> decode(std::string_view line, std::string& why) const {
    auto f = detail::split(line, ',');
    if (f.size() != ncols_) {
      why = "expected " + std::to_string(ncols_) + " fields, got " + std::to_string(f.size());
      return std::nullopt;
    }
    Transaction t;
    t.account_id = f[col_[kAccount]];
    t.merchant_raw = f[col_[kRaw]];
    t.merchant_brand = f[col_[kBrand]];
    t.zip = f[col_[kZip]];
    if (t.account_id.empty()) return fail(why, "empty account_id");
    if (t.merchant_raw.empty()) return fail(why, "empty merchant_raw");
    if (t.zip.size() != 5) return fail(why, "zip must be 5 characters");

    auto ts = f[col_[kTimestamp]];
    auto [p, ec] = std::from_chars(ts.data(), ts.data() + ts.size(), t.timestamp);
    if (ec != std::errc{} || p != ts.data() + ts.size() || ts.empty()) {
      return fail(why, "timestamp is not an integer");
    }
    if (t.timestamp < 0) return fail(why, "negative timestamp");

    auto am = f[col_[kAmount]];
    auto [q, ec2] = std::from_chars(am.data(), am.data() + am.size(), t.amount);
    if (ec2 != std::errc{} || q != am.data() + am.size() || am.empty()) {
      return fail(why, "amount is not a number");
    }
    if (!(t.amount >= 0.0)) return fail(why, "negative amount");

    if (col_[kChannel] >= 0) {
      auto ch = f[col_[kChannel]];
      if (ch == "online") {
        t.channel = Channel::online;
      } else if (ch == "offline") {
        t.channel = Channel::offline;
      } else {
        return fail(why, "channel must be online or offline");
      }
    } else {
      t.channel = looks_online(t.merchant_raw) ? Channel::online : Channel::offline;
    }

    if (col_[kFraud] >= 0) {
      auto fl = f[col_[kFraud]];
      if (fl == "1") {
        t.fraud_label = true;
      } else if (fl == "0") {
        t.fraud_label = false;
      } else if (!fl.empty()) {
        return fail(why, "fraud_label must be 0, 1 or empty");
      }
    }
    return t;
  }

  static std::nullopt_t fail(std::string& why, const char* msg) {
    why = msg;
    return std::nullopt;
  }

  static bool looks_online(std::string_view name) {
    if (name.size() < 4) return false;
    auto tail = name.substr(name.size() - 4);
    std::string lower;
    for (char c : tail) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return lower == ".com";
  }

  std::istream& in_;
  ReaderOptions opts_;
  std::array<int, kColumns> col_{};
  std::size_t ncols_ = 0;
  std::size_t line_no_ = 0;
  std::vector<RecordError> errors_;
};

inline std::vector<Transaction> parse_transactions(std::istream& in, ReaderOptions opts = {}) {
  TransactionReader reader(in, opts);
  std::vector<Transaction> out;
  while (auto t = reader.next()) out.push_back(std::move(*t));
  return out;
}

inline void write_transactions_header(std::ostream& out) { out << kTransactionsHeader << '\n'; }

inline void write_transaction(std::ostream& out, const Transaction& t) {
  out << t.account_id << ',' << t.merchant_raw << ',' << t.merchant_brand << ',' << t.zip << ','
      << t.timestamp << ',' << detail::fmt_f(t.amount, 2) << ',' << to_string(t.channel) << ',';
  if (t.fraud_label) out << (*t.fraud_label ? '1' : '0');
  out << '\n';
}

/// Entity keys must not contain whitespace: the embedding file is space-delimited.
inline std::string normalize_key(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (std::isspace(static_cast<unsigned char>(c))) c = '_';
  }
  return out;
}

inline std::string entity_key(const Transaction& t, EntityResolutionMode mode) {
  if (mode == EntityResolutionMode::brand && !t.merchant_brand.empty()) {
    return normalize_key(t.merchant_brand);
  }
  return normalize_key(t.merchant_raw) + "|" + normalize_key(t.zip);
}

inline std::vector<ResolvedTransaction> resolve_entities(std::span<const Transaction> txns,
                                                         EntityResolutionMode mode) {
  std::vector<ResolvedTransaction> out;
  out.reserve(txns.size());
  for (const auto& t : txns) {
    out.push_back({t.account_id, entity_key(t, mode), t.timestamp, t.channel});
  }
  return out;
}

struct ChannelSplit {
  std::vector<ResolvedTransaction> online;
  std::vector<ResolvedTransaction> offline;
};

inline ChannelSplit split_by_channel(std::span<const ResolvedTransaction> txns) {
  ChannelSplit out;
  for (const auto& t : txns) {
    (t.channel == Channel::online ? out.online : out.offline).push_back(t);
  }
  return out;
}

inline std::unordered_map<std::string, std::size_t> count_entities(
    std::span<const ResolvedTransaction> txns) {
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& t : txns) ++counts[t.entity_key];
  return counts;
}

/// Drops every transaction whose entity occurs fewer than `min_count` times.
inline std::vector<ResolvedTransaction> filter_low_frequency(
    std::span<const ResolvedTransaction> txns, std::size_t min_count) {
  if (min_count < 1) throw UsageError("min_count must be >= 1");
  auto counts = count_entities(txns);
  std::vector<ResolvedTransaction> out;
  out.reserve(txns.size());
  for (const auto& t : txns) {
    if (counts[t.entity_key] >= min_count) out.push_back(t);
  }
  return out;
}

}  // namespace txgraph
