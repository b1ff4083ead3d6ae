// Apache License, Version 2.0, refer to LICENSE.txt
//
// disprec command line: ingest ratings, profile dispositions, generate
// synthetic data, cross-validate a recommender, and run pooled-vs-
// partitioned experiments. Exit codes: 0 success, 1 runtime failure,
// 2 input/config error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "disprec/disposition.hpp"
#include "disprec/evaluation.hpp"
#include "disprec/experiment.hpp"
#include "disprec/io.hpp"
#include "disprec/ratings.hpp"
#include "disprec/report_io.hpp"
#include "disprec/synthetic.hpp"

namespace fs = std::filesystem;
using namespace disprec;

namespace {

std::uint64_t fnv1a_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::uint64_t h = 1469598103934665603ULL;
  char buf[65536];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ULL;
    }
    if (!in) break;
  }
  return h;
}

// Accepts either a ratings CSV or a cached binary dataset.
Dataset load_dataset(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  char magic[4] = {};
  in.read(magic, 4);
  in.clear();
  in.seekg(0);
  if (std::memcmp(magic, kDatasetMagic, 4) == 0) return read_dataset_binary(in);
  return parse_ratings_csv(in);
}

Dataset apply_min_ratings(Dataset ds, int min_ratings) {
  if (min_ratings <= 1) return ds;
  std::set<std::int64_t> keep;
  for (std::size_t u = 0; u < ds.n_users(); ++u)
    if (static_cast<int>(ds.user_rating_indices(static_cast<int>(u)).size()) >=
        min_ratings)
      keep.insert(ds.user_ids()[u]);
  if (keep.empty()) throw InputError("min-ratings filter removed every user");
  return filter_by_users(ds, keep);
}

int cmd_ingest(const fs::path& input, const fs::path& out_dir) {
  Dataset ds = load_dataset(input);
  if (ds.empty()) {
    std::cerr << "no ratings\n";
    return 2;
  }
  StatsSummary stats = dataset_stats(ds);
  std::cout << stats.n_users << " users, " << stats.n_items << " items, "
            << stats.n_ratings << " ratings\n";
  std::cout << "mean " << std::fixed << std::setprecision(4) << stats.global_mean
            << ", median " << std::setprecision(1) << stats.median << "\n";

  fs::create_directories(out_dir);
  std::ostringstream name;
  name << std::hex << std::setw(16) << std::setfill('0') << fnv1a_file(input)
       << ".drds";
  const fs::path cache = out_dir / name.str();
  if (fs::exists(cache)) {
    std::cout << "cache hit: " << cache.string() << "\n";
  } else {
    std::ofstream out(cache, std::ios::binary);
    write_dataset_binary(ds, out);
    std::cout << "cached: " << cache.string() << "\n";
  }
  return 0;
}

int cmd_profile(const fs::path& input, const fs::path& out_dir, int min_ratings) {
  Dataset ds = apply_min_ratings(load_dataset(input), min_ratings);
  std::vector<DispositionProfile> profiles = profile_users(ds);
  fs::create_directories(out_dir);

  {
    std::ofstream out(out_dir / "profiles.csv");
    out << "userId,nRatings,negativeFraction,bucket,optimism,positivePeak,"
           "extremePositiveRatio\n";
    out << std::setprecision(17);
    for (const auto& p : profiles) {
      out << p.user_id << ',' << p.n_ratings << ',' << p.negative_fraction << ','
          << bucket_label(p.bucket) << ',' << optimism_label(p.optimism) << ',';
      if (p.positive_peak) out << std::fixed << std::setprecision(1)
                               << *p.positive_peak << std::defaultfloat
                               << std::setprecision(17);
      out << ',';
      if (p.extreme_positive_ratio) out << *p.extreme_positive_ratio;
      out << '\n';
    }
  }
  {
    std::ofstream out(out_dir / "bucket_histogram.csv");
    out << "bucket,nUsers\n";
    int counts[6] = {};
    for (const auto& p : profiles) counts[static_cast<int>(p.bucket)]++;
    for (int b = 0; b < 6; ++b)
      out << bucket_label(static_cast<Bucket>(b)) << ',' << counts[b] << '\n';
  }
  {
    // Extreme-positive-ratio histogram, ten 10% bins, split by optimism.
    std::ofstream out(out_dir / "extreme_positive_histogram.csv");
    out << "optimism,binLow,binHigh,nUsers\n";
    int counts[2][10] = {};
    for (const auto& p : profiles) {
      if (!p.extreme_positive_ratio) continue;
      int bin = std::min(9, static_cast<int>(*p.extreme_positive_ratio * 10.0));
      counts[p.optimism == Optimism::Optimistic ? 0 : 1][bin]++;
    }
    for (int o = 0; o < 2; ++o)
      for (int b = 0; b < 10; ++b)
        out << (o == 0 ? "optimistic" : "pessimistic") << ',' << b * 0.1 << ','
            << (b + 1) * 0.1 << ',' << counts[o][b] << '\n';
  }
  std::size_t optimistic = 0;
  for (const auto& p : profiles)
    if (p.optimism == Optimism::Optimistic) ++optimistic;
  std::cout << profiles.size() << " users profiled, " << std::fixed
            << std::setprecision(1)
            << 100.0 * optimistic / profiles.size() << "% optimistic\n";
  return 0;
}

int cmd_synth(const fs::path& config_path, const fs::path& out_path) {
  std::ifstream in(config_path);
  if (!in) throw InputError("cannot open " + config_path.string());
  SyntheticConfig cfg = parse_synthetic_config(in);
  Dataset ds = generate_synthetic(cfg);
  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  std::ofstream out(out_path);
  serialize_ratings_csv(ds, out);
  std::cout << "wrote " << ds.n_ratings() << " ratings (" << ds.n_users()
            << " users, " << ds.n_items() << " items) to " << out_path.string()
            << "\n";
  return 0;
}

void fill_common(ExperimentConfig& cfg, const std::string& algo, int folds,
                 int k, std::uint64_t seed) {
  if (algo == "user-knn") cfg.algorithm = Algorithm::UserKnn;
  else if (algo == "item-knn") cfg.algorithm = Algorithm::ItemKnn;
  else if (algo == "svd") cfg.algorithm = Algorithm::Svd;
  else throw InputError("unknown algorithm '" + algo + "'");
  cfg.folds = folds;
  cfg.eval.k = k;
  cfg.master_seed = seed;
}

int cmd_evaluate(const fs::path& input, const fs::path& out_dir,
                 const std::string& algo, int folds, int k, std::uint64_t seed,
                 int min_ratings) {
  Dataset ds = apply_min_ratings(load_dataset(input), min_ratings);
  ExperimentConfig cfg;
  fill_common(cfg, algo, folds, k, seed);
  std::vector<MetricsReport> reports = run_cross_validation(ds, cfg);

  fs::create_directories(out_dir);
  std::ofstream csv(out_dir / "metrics.csv");
  for (const auto& [key, val] : config_provenance(cfg))
    csv << "# " << key << " = " << val << '\n';
  csv << "fold,ndcg,precision,rmse,nUsers,nPairs\n";
  csv << std::setprecision(17);
  double ndcg = 0, prec = 0, rm = 0;
  for (std::size_t f = 0; f < reports.size(); ++f) {
    const MetricsReport& r = reports[f];
    csv << f << ',' << r.ndcg_mean << ',' << r.precision_mean << ',' << r.rmse
        << ',' << r.n_users << ',' << r.n_pairs << '\n';
    ndcg += r.ndcg_mean;
    prec += r.precision_mean;
    rm += r.rmse;
  }
  const double nf = static_cast<double>(reports.size());
  csv << "mean," << ndcg / nf << ',' << prec / nf << ',' << rm / nf << ",,\n";
  std::cout << std::fixed << std::setprecision(3) << "ndcg@" << k << " "
            << ndcg / nf << ", precision@" << k << " " << prec / nf << ", rmse "
            << rm / nf << "\n";
  return 0;
}

int cmd_experiment(const fs::path& input, const fs::path& out_dir,
                   const std::string& algo, const std::string& scheme, int folds,
                   int k, double threshold, std::uint64_t seed, int min_ratings) {
  Dataset ds = apply_min_ratings(load_dataset(input), min_ratings);
  ExperimentConfig cfg;
  fill_common(cfg, algo, folds, k, seed);
  cfg.scheme.threshold = threshold;
  if (scheme == "binary") cfg.scheme.variant = PartitionScheme::Variant::Binary;
  else if (scheme == "neg-bucket") cfg.scheme.variant = PartitionScheme::Variant::NegBucket;
  else if (scheme == "pos-peak") cfg.scheme.variant = PartitionScheme::Variant::PositivePeak;
  else if (scheme == "identity") cfg.scheme.variant = PartitionScheme::Variant::Identity;
  else throw InputError("unknown scheme '" + scheme + "'");

  ComparisonReport report = run_partition_experiment(ds, cfg);

  fs::create_directories(out_dir);
  {
    std::ofstream out(out_dir / "report.txt");
    write_report_table(report, out);
  }
  {
    std::ofstream out(out_dir / "report.csv");
    write_report_csv(report, out);
  }
  {
    std::ofstream out(out_dir / "report.json");
    write_report_json(report, out);
  }
  write_report_table(report, std::cout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rating-disposition partitioned recommender experiments"};
  app.require_subcommand(1);
  app.set_config("--config", "", "read options from a key=value config file");
  app.failure_message(CLI::FailureMessage::help);

  std::string input, out = "out", algo = "user-knn", scheme = "binary";
  std::string synth_config;
  int folds = 5, k = 8, min_ratings = 1;
  double threshold = 0.30;
  std::uint64_t seed = 0;
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "chatty progress output");

  auto* ingest = app.add_subcommand("ingest", "parse a ratings CSV and cache it");
  ingest->add_option("--input", input, "ratings CSV or cached dataset")->required();
  ingest->add_option("--out", out, "output directory");

  auto* profile = app.add_subcommand("profile", "per-user disposition profiles");
  profile->add_option("--input", input)->required();
  profile->add_option("--out", out);
  profile->add_option("--min-ratings", min_ratings, "drop users with fewer ratings");

  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("--synth-config", synth_config, "population config file")->required();
  synth->add_option("--out", out, "output CSV path");

  auto* evaluate = app.add_subcommand("evaluate", "cross-validate one algorithm");
  evaluate->add_option("--input", input)->required();
  evaluate->add_option("--out", out);
  evaluate->add_option("--algo", algo)->check(CLI::IsMember({"user-knn", "item-knn", "svd"}));
  evaluate->add_option("--folds", folds)->check(CLI::Range(2, 100));
  evaluate->add_option("--k", k)->check(CLI::PositiveNumber);
  evaluate->add_option("--seed", seed)->required();
  evaluate->add_option("--min-ratings", min_ratings);

  auto* experiment = app.add_subcommand("experiment", "pooled vs partitioned comparison");
  experiment->add_option("--input", input)->required();
  experiment->add_option("--out", out);
  experiment->add_option("--algo", algo)->check(CLI::IsMember({"user-knn", "item-knn", "svd"}));
  experiment->add_option("--scheme", scheme)
      ->check(CLI::IsMember({"binary", "neg-bucket", "pos-peak", "identity"}));
  experiment->add_option("--folds", folds)->check(CLI::Range(2, 100));
  experiment->add_option("--k", k)->check(CLI::PositiveNumber);
  experiment->add_option("--threshold", threshold)->check(CLI::Range(0.0, 1.0));
  experiment->add_option("--seed", seed)->required();
  experiment->add_option("--min-ratings", min_ratings);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*ingest) return cmd_ingest(input, out);
    if (*profile) return cmd_profile(input, out, min_ratings);
    if (*synth) return cmd_synth(synth_config, out);
    if (*evaluate)
      return cmd_evaluate(input, out, algo, folds, k, seed, min_ratings);
    if (*experiment)
      return cmd_experiment(input, out, algo, scheme, folds, k, threshold, seed,
                            min_ratings);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
