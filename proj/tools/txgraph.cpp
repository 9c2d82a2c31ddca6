// txgraph: command-line driver for the transaction-graph embedding pipeline.
//
//   txgraph synth --out market/
//   txgraph pairs --input market/transactions.csv --window 1800 --out pairs.tsv
//   txgraph train --pairs pairs.tsv --out emb.txt
//   txgraph eval --pairs pairs.tsv --out report.txt
//
// Option values layer as: built-in default < --config file < command line.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "txgraph/analysis.hpp"
#include "txgraph/downstream.hpp"
#include "txgraph/eval.hpp"
#include "txgraph/ingest.hpp"
#include "txgraph/pairing.hpp"
#include "txgraph/sgns.hpp"
#include "txgraph/synthgen.hpp"
#include "txgraph/vocab.hpp"

namespace fs = std::filesystem;
using namespace txgraph;

namespace {

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "' for reading");
  return in;
}

/// Output file, or standard output for "-".
class Output {
 public:
  explicit Output(const std::string& path) {
    if (path != "-") {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw DataError("cannot open '" + path + "' for writing");
    }
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }
  void close() {
    if (file_) {
      file_->close();
      if (!*file_) throw DataError("write failed");
    } else {
      std::cout.flush();
    }
  }

 private:
  std::unique_ptr<std::ofstream> file_;
};

void warn(const std::string& msg) { std::cerr << "txgraph: warning: " << msg << '\n'; }

std::string fmt(double v) { return detail::fmt_g(v, 6); }

EntityResolutionMode parse_mode(const std::string& m) {
  return m == "raw" ? EntityResolutionMode::raw_plus_zip : EntityResolutionMode::brand;
}

CLI::Option* add_mode(CLI::App* app, std::string& mode, const std::string& help) {
  return app->add_option("--mode", mode, help)->check(CLI::IsMember({"raw", "brand"}));
}

std::vector<TransactionPair> load_pairs(const std::string& path) {
  auto in = open_in(path);
  return read_pairs(in);
}

EmbeddingTable load_embeddings(const std::string& path) {
  auto in = open_in(path);
  return read_embeddings(in);
}

std::vector<Transaction> load_transactions(const std::string& path, std::size_t max_errors) {
  auto in = open_in(path);
  ReaderOptions opts;
  opts.max_errors = max_errors;
  TransactionReader reader(in, opts);
  std::vector<Transaction> out;
  while (auto t = reader.next()) out.push_back(std::move(*t));
  for (const auto& e : reader.errors()) warn("line " + std::to_string(e.line) + ": " + e.message);
  return out;
}

// Training flags shared by train, eval and sweep.
struct TrainFlags {
  TrainConfig cfg;
  std::string log_path;
  bool quiet = false;

  void add(CLI::App* app, bool with_workers) {
    app->add_option("--dim", cfg.dim, "Embedding dimension d")->check(CLI::PositiveNumber);
    app->add_option("--negatives", cfg.negatives, "Negative samples k per update")->check(CLI::PositiveNumber);
    app->add_option("--lr", cfg.learning_rate, "Initial learning rate")->check(CLI::PositiveNumber);
    app->add_option("--epochs", cfg.epochs, "Passes over the pairs (fractional allowed)")
        ->check(CLI::PositiveNumber);
    app->add_option("--alpha", cfg.alpha, "Negative-sampling smoothing exponent")->check(CLI::Range(0.0, 1.0));
    if (with_workers) {
      app->add_option("--workers", cfg.workers, "Training threads (only 1 is reproducible)")
          ->check(CLI::PositiveNumber);
    }
    app->add_option("--log", log_path, "Training log file (default: standard error)");
    app->add_flag("--quiet", quiet, "Suppress the training log");
  }

  std::ostream* log(std::unique_ptr<std::ofstream>& holder) const {
    if (quiet) return nullptr;
    if (log_path.empty()) return &std::cerr;
    holder = std::make_unique<std::ofstream>(log_path);
    if (!*holder) throw DataError("cannot open '" + log_path + "' for writing");
    return holder.get();
  }
};

void echo_train(std::ostream& out, const TrainConfig& c) {
  out << "lr=" << fmt(c.learning_rate) << '\n'
      << "alpha=" << fmt(c.alpha) << '\n'
      << "workers=" << c.workers << '\n';
}

// ---------------------------------------------------------------------------

void add_synth(CLI::App& app) {
  auto* sub = app.add_subcommand("synth", "Generate a synthetic market with planted ground truth");
  auto spec = std::make_shared<MarketSpec>();
  auto out = std::make_shared<std::string>();
  sub->add_option("--out", *out, "Output directory (created if missing)")->required();
  sub->add_option("--seed", spec->seed, "Random seed");
  sub->add_option("--merchants", spec->n_merchants, "Number of merchants");
  sub->add_option("--brands", spec->n_brands, "Number of brands (franchise groups)");
  sub->add_option("--categories", spec->n_categories, "Number of merchant categories");
  sub->add_option("--regions", spec->n_regions, "Number of geographic regions");
  sub->add_option("--accounts", spec->n_accounts, "Number of accounts");
  sub->add_option("--tiers", spec->price_tiers, "Number of price tiers");
  sub->add_option("--txn-rate", spec->txn_rate, "Mean transactions per account");
  sub->add_option("--session-window", spec->session_window_seconds, "Session window in seconds");
  sub->add_option("--fraud-merchant-fraction", spec->fraud_merchant_fraction, "Fraction of merchants flagged fraud");
  sub->add_option("--fraud-txn-rate", spec->fraud_txn_rate, "Label rate within fraud sessions");
  sub->add_option("--days", spec->days, "Days covered by the market");
  sub->add_option("--online-fraction", spec->online_brand_fraction, "Fraction of online brands");
  sub->add_option("--compromised-fraction", spec->compromised_account_fraction, "Fraction of compromised accounts");
  sub->add_option("--category-groups", spec->category_groups, "Groups of related categories");
  sub->add_option("--categories-per-account", spec->categories_per_account, "Preferred categories per account");
  sub->add_option("--session-size", spec->mean_session_size, "Mean transactions per session");
  sub->add_option("--p-session-category", spec->p_session_category, "Probability of the session's focus category");
  sub->add_option("--p-random-category", spec->p_random_category, "Probability of an arbitrary category");
  sub->add_option("--p-account-tier", spec->p_account_tier, "Probability of the account's price tier");
  sub->add_option("--p-home-region", spec->p_home_region, "Probability of a home-region franchise");
  sub->add_option("--fraud-sessions", spec->mean_fraud_sessions, "Mean fraud sessions per compromised account");
  sub->callback([spec, out] {
    spec->validate();
    auto market = generate_market(*spec);
    fs::create_directories(*out);
    const fs::path dir(*out);
    {
      Output o((dir / "transactions.csv").string());
      write_market(o.stream(), market);
      o.close();
    }
    {
      Output o((dir / "truth.tsv").string());
      write_truth(o.stream(), market.truth);
      o.close();
    }
    Output o((dir / "spec.txt").string());
    auto& s = o.stream();
    s << "seed=" << spec->seed << "\nmerchants=" << spec->n_merchants << "\nbrands=" << spec->n_brands
      << "\ncategories=" << spec->n_categories << "\nregions=" << spec->n_regions
      << "\naccounts=" << spec->n_accounts << "\ntiers=" << spec->price_tiers
      << "\ntxn_rate=" << fmt(spec->txn_rate) << "\nsession_window=" << spec->session_window_seconds
      << "\nfraud_merchant_fraction=" << fmt(spec->fraud_merchant_fraction)
      << "\nfraud_txn_rate=" << fmt(spec->fraud_txn_rate) << "\ndays=" << spec->days
      << "\nonline_fraction=" << fmt(spec->online_brand_fraction)
      << "\ncompromised_fraction=" << fmt(spec->compromised_account_fraction)
      << "\ncategory_groups=" << spec->category_groups
      << "\ncategories_per_account=" << spec->categories_per_account
      << "\nsession_size=" << fmt(spec->mean_session_size)
      << "\np_session_category=" << fmt(spec->p_session_category)
      << "\np_random_category=" << fmt(spec->p_random_category)
      << "\np_account_tier=" << fmt(spec->p_account_tier) << "\np_home_region=" << fmt(spec->p_home_region)
      << "\nfraud_sessions=" << fmt(spec->mean_fraud_sessions) << "\ntransactions=" << market.transactions.size()
      << '\n';
    o.close();
  });
}

void add_pairs(CLI::App& app) {
  auto* sub = app.add_subcommand("pairs", "Resolve entities and emit time-window co-occurrence pairs");
  struct Opts {
    std::string input, out;
    std::string mode = "brand";
    std::int64_t window = 0;
    std::size_t min_count = 0;
    std::string channel = "all";
    std::size_t max_fanout = 50;
    std::string grouping = "account";
    std::size_t max_errors = 0;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--input", o->input, "Transactions CSV")->required();
  sub->add_option("--out", o->out, "Pairs TSV ('-' for standard output)")->required();
  add_mode(sub, o->mode, "Entity resolution: raw (name + zip) or brand");
  sub->add_option("--window", o->window, "Time window in seconds (inclusive)")->required()->check(CLI::PositiveNumber);
  sub->add_option("--min-count", o->min_count,
                  "Drop entities with fewer transactions; 0 selects the mode default (brand 50, raw 1)");
  sub->add_option("--channel", o->channel, "Channel to keep")->check(CLI::IsMember({"all", "online", "offline"}));
  sub->add_option("--max-fanout", o->max_fanout, "Pairs per anchor transaction; 0 means unlimited");
  sub->add_option("--grouping", o->grouping, "account: merchant pairs; merchant: account pairs")
      ->check(CLI::IsMember({"account", "merchant"}));
  sub->add_option("--max-errors", o->max_errors, "Malformed rows tolerated before aborting");
  sub->callback([o] {
    auto txns = load_transactions(o->input, o->max_errors);
    auto resolved = resolve_entities(txns, parse_mode(o->mode));
    txns.clear();
    txns.shrink_to_fit();
    if (o->channel != "all") {
      auto parts = split_by_channel(resolved);
      resolved = o->channel == "online" ? std::move(parts.online) : std::move(parts.offline);
    }
    std::size_t min_count = o->min_count;
    if (min_count == 0) min_count = o->mode == "brand" ? 50 : 1;
    resolved = filter_low_frequency(resolved, min_count);

    PairingConfig cfg;
    cfg.window_seconds = o->window;
    cfg.max_fanout = o->max_fanout == 0 ? kUnlimited : o->max_fanout;
    cfg.grouping_key = o->grouping == "merchant" ? GroupingKey::merchant : GroupingKey::account;
    auto pairs = generate_pairs(resolved, cfg);
    if (pairs.empty()) {
      warn("no pairs generated (" + std::to_string(resolved.size()) + " transactions after channel '" +
           o->channel + "' and min-count " + std::to_string(min_count) + " filters)");
    }
    Output out(o->out);
    write_pairs(out.stream(), pairs);
    out.close();
    auto st = pair_stats(pairs);
    std::cerr << "entities=" << st.entities << " edges=" << st.edges << " pairs=" << st.pairs << '\n';
  });
}

void add_train(CLI::App& app) {
  auto* sub = app.add_subcommand("train", "Train skip-gram embeddings with negative sampling");
  struct Opts {
    std::string pairs, out;
    TrainFlags flags;
    std::string vectors = "input";
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--pairs", o->pairs, "Pairs TSV")->required();
  sub->add_option("--out", o->out, "Embedding file ('-' for standard output)")->required();
  sub->add_option("--seed", o->flags.cfg.seed, "Random seed");
  o->flags.add(sub, true);
  sub->add_option("--export", o->vectors, "Exported vectors: input or mean (of input and context)")
      ->check(CLI::IsMember({"input", "mean"}));
  sub->callback([o] {
    auto pairs = load_pairs(o->pairs);
    o->flags.cfg.validate();
    auto built = build_vocab(pairs);
    auto table = build_sampling_table(built.vocab, o->flags.cfg.alpha);
    auto ids = encode_pairs(pairs, built.vocab);
    pairs.clear();
    std::unique_ptr<std::ofstream> log_file;
    TrainStats stats;
    auto model = train(ids, built.vocab, built.edges, table, o->flags.cfg, o->flags.log(log_file), &stats);
    Output out(o->out);
    export_embeddings(out.stream(), model, built.vocab,
                      o->vectors == "mean" ? ExportVectors::mean_of_input_and_context : ExportVectors::input);
    out.close();
    std::cerr << "entities=" << built.vocab.size() << " updates=" << stats.updates
              << " negative_escapes=" << stats.negative_escapes << '\n';
  });
}

struct EvalFlags {
  double holdout = 0.1;
  std::string score = "logistic";
  double validation_fraction = 0.3;

  void add(CLI::App* app) {
    app->add_option("--holdout", holdout, "Fraction of distinct edges held out")->check(CLI::Range(0.0, 1.0));
    app->add_option("--score", score, "Edge score: logistic (of input dot product) or cosine")
        ->check(CLI::IsMember({"logistic", "cosine"}));
    app->add_option("--validation-fraction", validation_fraction, "Share of test edges used to pick the F1 threshold")
        ->check(CLI::Range(0.0, 1.0));
  }
  EvalOptions options() const {
    return {score == "cosine" ? EdgeScore::cosine : EdgeScore::logistic_dot, validation_fraction};
  }
  void echo(std::ostream& out) const {
    out << "holdout=" << fmt(holdout) << '\n'
        << "score=" << score << '\n'
        << "validation_fraction=" << fmt(validation_fraction) << '\n';
  }
};

void add_eval(CLI::App& app) {
  auto* sub = app.add_subcommand("eval", "Hold out edges, train, and report link-prediction AUC and F1");
  struct Opts {
    std::string pairs, out = "-", split_out, embeddings_out;
    TrainFlags flags;
    EvalFlags eval;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--pairs", o->pairs, "Pairs TSV")->required();
  sub->add_option("--out", o->out, "Report file ('-' for standard output)");
  sub->add_option("--seed", o->flags.cfg.seed, "Seed for the split and for training");
  o->flags.add(sub, false);
  o->eval.add(sub);
  sub->add_option("--split-out", o->split_out, "File for the held-out test edges (default: not written)");
  sub->add_option("--embeddings-out", o->embeddings_out, "File for the trained embeddings (default: not written)");
  sub->callback([o] {
    auto pairs = load_pairs(o->pairs);
    auto split = make_holdout(pairs, o->eval.holdout, o->flags.cfg.seed);
    std::unique_ptr<std::ofstream> log_file;
    auto table = train_embeddings(split.train_pairs, o->flags.cfg, o->flags.log(log_file));
    auto report = evaluate_link_prediction(table, split, o->eval.options());
    report.k = o->flags.cfg.negatives;
    report.epochs = o->flags.cfg.epochs;
    Output out(o->out);
    write_report(out.stream(), report);
    echo_train(out.stream(), o->flags.cfg);
    o->eval.echo(out.stream());
    out.close();
    if (!o->split_out.empty()) {
      Output s(o->split_out);
      write_split(s.stream(), split);
      s.close();
    }
    if (!o->embeddings_out.empty()) {
      Output e(o->embeddings_out);
      write_embeddings(e.stream(), table);
      e.close();
    }
  });
}

void add_sweep(CLI::App& app) {
  auto* sub = app.add_subcommand("sweep", "Link-prediction AUC across embedding dimensions on one split");
  struct Opts {
    std::string pairs, out = "-";
    std::vector<std::size_t> dims{2, 5, 10, 16, 50};
    TrainFlags flags;
    EvalFlags eval;
  };
  auto o = std::make_shared<Opts>();
  o->flags.quiet = true;
  sub->add_option("--pairs", o->pairs, "Pairs TSV")->required();
  sub->add_option("--out", o->out, "Report file, one line per dimension ('-' for standard output)");
  sub->add_option("--dims", o->dims, "Comma-separated dimensions")->delimiter(',')->check(CLI::PositiveNumber);
  sub->add_option("--seed", o->flags.cfg.seed, "Seed for the split and for training");
  o->flags.add(sub, false);
  o->eval.add(sub);
  sub->callback([o] {
    auto pairs = load_pairs(o->pairs);
    auto split = make_holdout(pairs, o->eval.holdout, o->flags.cfg.seed);
    std::unique_ptr<std::ofstream> log_file;
    auto* log = o->flags.log(log_file);
    Output out(o->out);
    for (auto d : o->dims) {
      auto cfg = o->flags.cfg;
      cfg.dim = d;
      auto table = train_embeddings(split.train_pairs, cfg, log);
      auto r = evaluate_link_prediction(table, split, o->eval.options());
      out.stream() << "dim=" << d << " lpa=" << detail::fmt_f(r.lpa, 4) << " f1=" << detail::fmt_f(r.f1, 4)
                   << " threshold=" << format_threshold(r.threshold) << " n_test_pos=" << r.n_test_pos
                   << " n_test_neg=" << r.n_test_neg << " seed=" << r.seed << " k=" << cfg.negatives
                   << " epochs=" << fmt(cfg.epochs) << " lr=" << fmt(cfg.learning_rate)
                   << " alpha=" << fmt(cfg.alpha) << " holdout=" << fmt(o->eval.holdout)
                   << " score=" << o->eval.score << '\n';
      out.stream().flush();
    }
    out.close();
  });
}

void add_neighbors(CLI::App& app) {
  auto* sub = app.add_subcommand("neighbors", "Nearest neighbours of an entity by cosine similarity");
  struct Opts {
    std::string embeddings, query, out = "-";
    std::size_t top = 10;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--embeddings", o->embeddings, "Embedding file")->required();
  sub->add_option("--query", o->query, "Entity key")->required();
  sub->add_option("--top", o->top, "Number of neighbours")->check(CLI::PositiveNumber);
  sub->add_option("--out", o->out, "Output ('-' for standard output)");
  sub->callback([o] {
    auto table = load_embeddings(o->embeddings);
    auto r = nearest_neighbors(table, o->query, o->top);
    Output out(o->out);
    write_neighbors(out.stream(), r.neighbors);
    out.close();
  });
}

void add_analogy(CLI::App& app) {
  auto* sub = app.add_subcommand("analogy", "Rank entities by cosine to vec(a) - vec(b) + vec(c)");
  struct Opts {
    std::string embeddings, a, b, c, out = "-";
    std::size_t top = 10;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--embeddings", o->embeddings, "Embedding file")->required();
  sub->add_option("--a", o->a, "Entity a")->required();
  sub->add_option("--b", o->b, "Entity b")->required();
  sub->add_option("--c", o->c, "Entity c")->required();
  sub->add_option("--top", o->top, "Number of results")->check(CLI::PositiveNumber);
  sub->add_option("--out", o->out, "Output ('-' for standard output)");
  sub->callback([o] {
    auto table = load_embeddings(o->embeddings);
    auto r = analogy(table, o->a, o->b, o->c, o->top);
    Output out(o->out);
    write_neighbors(out.stream(), r);
    out.close();
  });
}

void add_project(CLI::App& app) {
  auto* sub = app.add_subcommand("project", "Export two principal-component coordinates per entity");
  struct Opts {
    std::string embeddings, out = "-", variance_out;
    std::size_t x = 0, y = 1;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--embeddings", o->embeddings, "Embedding file")->required();
  sub->add_option("--x", o->x, "Component index for the first coordinate (0-based)");
  sub->add_option("--y", o->y, "Component index for the second coordinate (0-based)");
  sub->add_option("--out", o->out, "Output TSV key/x/y ('-' for standard output)");
  sub->add_option("--variance-out", o->variance_out, "TSV of explained variance per component (default: not written)");
  sub->callback([o] {
    auto table = load_embeddings(o->embeddings);
    auto n = std::min(table.size(), table.dim());
    if (o->x >= n || o->y >= n) throw UsageError("--x/--y: component index must be < " + std::to_string(n));
    auto p = pca(table, n);
    Output out(o->out);
    export_projection(out.stream(), table, p, o->x, o->y);
    out.close();
    if (!o->variance_out.empty()) {
      Output v(o->variance_out);
      for (Eigen::Index c = 0; c < p.explained_variance.size(); ++c) {
        v.stream() << c << '\t' << detail::fmt_g(p.explained_variance(c), 9) << '\t'
                   << detail::fmt_f(p.explained_variance_ratio(c), 6) << '\n';
      }
      v.close();
    }
  });
}

std::vector<std::pair<std::string, std::string>> read_direction_pairs(const std::string& path) {
  auto in = open_in(path);
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    auto v = detail::chomp(line);
    if (v.empty()) continue;
    auto f = detail::split(v, '\t');
    if (f.size() != 2) throw DataError(path + ":" + std::to_string(n) + ": expected 'high<TAB>low'");
    out.emplace_back(std::string(f[0]), std::string(f[1]));
  }
  return out;
}

void add_direction(CLI::App& app) {
  auto* sub = app.add_subcommand("direction", "Consistency of (high - low) difference vectors");
  struct Opts {
    std::string embeddings, pairs_file, truth, out = "-";
    std::string mode = "brand";
    std::vector<std::size_t> subspace;
    bool scan = false;
    std::uint64_t seed = 0;
    std::size_t resamples = 2000;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--embeddings", o->embeddings, "Embedding file")->required();
  auto* pf = sub->add_option("--pairs-file", o->pairs_file, "TSV of high<TAB>low entity pairs (this or --truth is required)");
  auto* tf = sub->add_option("--truth", o->truth, "Ground-truth TSV; samples one top/bottom tier pair per category (this or --pairs-file is required)");
  pf->excludes(tf);
  add_mode(sub, o->mode, "Resolution mode of the embeddings when using --truth");
  sub->add_option("--subspace", o->subspace, "Comma-separated PCA component indices")->delimiter(',');
  sub->add_flag("--scan", o->scan, "Also report the component pair with the highest consistency");
  sub->add_option("--seed", o->seed, "Seed for pair sampling and the bootstrap");
  sub->add_option("--resamples", o->resamples, "Bootstrap resamples for the 99% lower bound")
      ->check(CLI::PositiveNumber);
  sub->add_option("--out", o->out, "Report file ('-' for standard output)");
  sub->callback([o] {
    if (o->pairs_file.empty() == o->truth.empty()) throw UsageError("give exactly one of --pairs-file or --truth");
    auto table = load_embeddings(o->embeddings);
    std::vector<std::pair<std::string, std::string>> pairs;
    if (!o->pairs_file.empty()) {
      pairs = read_direction_pairs(o->pairs_file);
    } else {
      auto in = open_in(o->truth);
      auto truth = rollup_truth(read_truth(in), parse_mode(o->mode));
      pairs = sample_tier_pairs(table, truth, o->seed);
    }
    auto full = direction_consistency(table, pairs);
    for (const auto& [hi, lo] : full.excluded) warn("zero difference for pair " + hi + " / " + lo + "; excluded");
    Output out(o->out);
    auto& s = out.stream();
    s << "n_pairs=" << pairs.size() << "\nexcluded=" << full.excluded.size()
      << "\nmean_cosine=" << detail::fmt_f(full.mean_cosine, 4)
      << "\nlower_bound_99=" << detail::fmt_f(direction_lower_bound(full, o->resamples, 0.01, o->seed), 4) << '\n';
    const auto n = std::min(table.size(), table.dim());
    if (!o->subspace.empty() || o->scan) {
      auto p = pca(table, n);
      if (!o->subspace.empty()) {
        auto r = direction_consistency(table, pairs, &p, o->subspace);
        s << "subspace=";
        for (std::size_t i = 0; i < o->subspace.size(); ++i) s << (i ? "," : "") << o->subspace[i];
        s << "\nmean_cosine_subspace=" << detail::fmt_f(r.mean_cosine, 4) << '\n';
      }
      if (o->scan) {
        auto best = scan_subspaces(table, pairs, p);
        s << "best_subspace=" << best.first << ',' << best.second
          << "\nbest_subspace_cosine=" << detail::fmt_f(best.mean_cosine, 4) << '\n';
      }
    }
    s << "seed=" << o->seed << "\nresamples=" << o->resamples << '\n';
    out.close();
  });
}

void add_purity(CLI::App& app) {
  auto* sub = app.add_subcommand("purity", "Neighbour purity and tier direction against synthetic ground truth");
  struct Opts {
    std::string embeddings, truth, out = "-";
    std::string mode = "brand";
    std::size_t k = 5;
    std::uint64_t seed = 0;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--embeddings", o->embeddings, "Embedding file")->required();
  sub->add_option("--truth", o->truth, "Ground-truth TSV written by synth")->required();
  add_mode(sub, o->mode, "Resolution mode the embeddings were trained with");
  sub->add_option("--k", o->k, "Neighbours per entity")->check(CLI::PositiveNumber);
  sub->add_option("--seed", o->seed, "Seed for tier-pair sampling");
  sub->add_option("--out", o->out, "Report file ('-' for standard output)");
  sub->callback([o] {
    auto table = load_embeddings(o->embeddings);
    auto in = open_in(o->truth);
    auto truth = rollup_truth(read_truth(in), parse_mode(o->mode));
    auto g = ground_truth_metrics(table, truth, o->seed, o->k);
    Output out(o->out);
    out.stream() << "category_purity=" << detail::fmt_f(g.category_purity.mean, 4)
                 << "\ncategory_purity_se=" << detail::fmt_f(g.category_purity.std_error, 4)
                 << "\nregion_purity=" << detail::fmt_f(g.region_purity.mean, 4)
                 << "\nregion_purity_se=" << detail::fmt_f(g.region_purity.std_error, 4)
                 << "\ntier_direction=" << detail::fmt_f(g.tier_direction, 4)
                 << "\ntier_pairs=" << g.tier_pairs.size() << "\nentities=" << table.size()
                 << "\nk=" << o->k << "\nseed=" << o->seed << "\nmode=" << o->mode << '\n';
    out.close();
  });
}

void add_fraud_eval(CLI::App& app) {
  auto* sub = app.add_subcommand("fraud-eval", "Fraud AUpr of baseline vs. embedding-feature classifiers");
  struct Opts {
    std::string transactions, embeddings, out = "-", control = "none", mode = "raw";
    LiftConfig cfg;
    std::size_t max_errors = 0;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--transactions", o->transactions, "Labeled transactions CSV")->required();
  sub->add_option("--embeddings", o->embeddings, "Merchant embedding file")->required();
  add_mode(sub, o->mode, "Resolution mode the embeddings were trained with");
  sub->add_option("--seed", o->cfg.seed, "Random seed");
  sub->add_option("--train-fraction", o->cfg.train_fraction, "Chronological share of transactions used for training")
      ->check(CLI::Range(0.0, 1.0));
  sub->add_option("--hidden", o->cfg.scorer.hidden, "Hidden width of the projection scorer")
      ->check(CLI::PositiveNumber);
  sub->add_option("--scorer-epochs", o->cfg.scorer.epochs, "Gradient steps for the projection scorer");
  sub->add_option("--scorer-lr", o->cfg.scorer.learning_rate, "Step size for the projection scorer");
  sub->add_option("--iterations", o->cfg.classifier.iterations, "Gradient steps for each logistic classifier");
  sub->add_option("--classifier-lr", o->cfg.classifier.learning_rate, "Step size for the logistic classifiers");
  sub->add_option("--control", o->control, "none, or noise: replace vectors by randomly assigned noise rows")
      ->check(CLI::IsMember({"none", "noise"}));
  sub->add_option("--max-errors", o->max_errors, "Malformed rows tolerated before aborting");
  sub->add_option("--out", o->out, "Report file ('-' for standard output)");
  sub->callback([o] {
    o->cfg.mode = parse_mode(o->mode);
    auto txns = load_transactions(o->transactions, o->max_errors);
    auto table = load_embeddings(o->embeddings);
    auto rep = o->control == "noise"
                   ? noise_lift_experiment(txns, table.size(), table.dim(), o->cfg, detail::mix_seed(o->cfg.seed, 9))
                   : lift_experiment(txns, table, o->cfg);
    if (rep.missing_rows > 0) {
      warn(std::to_string(rep.missing_rows) + " labeled rows have no merchant vector; zero vectors used");
    }
    Output out(o->out);
    write_lift_report(out.stream(), rep);
    out.stream() << "control=" << o->control << '\n';
    out.close();
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transaction-graph embedding toolkit", "txgraph"};
  app.option_defaults()->always_capture_default();
  app.set_config("--config", "", "TOML/INI file of option values; [subcommand] sections apply to that subcommand");
  app.require_subcommand(1);

  add_synth(app);
  add_pairs(app);
  add_train(app);
  add_eval(app);
  add_sweep(app);
  add_neighbors(app);
  add_analogy(app);
  add_project(app);
  add_direction(app);
  add_purity(app);
  add_fraud_eval(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const UsageError& e) {
    std::cerr << "txgraph: usage error: " << e.what() << '\n';
    return 1;
  } catch (const DataError& e) {
    std::cerr << "txgraph: data error: " << e.what() << '\n';
    return 2;
  } catch (const InvariantError& e) {
    std::cerr << "txgraph: internal error: " << e.what() << '\n';
    return 3;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "txgraph: data error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "txgraph: internal error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
