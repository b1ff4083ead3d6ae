// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "disprec/disposition.hpp"
#include "disprec/evaluation.hpp"
#include "disprec/knn.hpp"
#include "disprec/ratings.hpp"
#include "disprec/rng.hpp"
#include "disprec/stats.hpp"
#include "disprec/svd.hpp"

namespace disprec {

enum class Algorithm { UserKnn, ItemKnn, Svd };

inline const char* algorithm_label(Algorithm a) {
  switch (a) {
    case Algorithm::UserKnn: return "user-knn";
    case Algorithm::ItemKnn: return "item-knn";
    case Algorithm::Svd: return "svd";
  }
  return "?";
}

struct ExperimentConfig {
  Algorithm algorithm = Algorithm::UserKnn;
  PartitionScheme scheme;
  int folds = 5;
  EvalParams eval;
  KnnParams knn;
  SvdParams svd;
  std::uint64_t master_seed = 0;

  void validate() const {
    if (folds < 2) throw InputError("experiment: folds must be >= 2");
    eval.validate();
    knn.validate();
    svd.validate();
  }
};

// RNG stream labels under the master seed.
namespace seed_purpose {
inline constexpr std::uint64_t kFoldSplit = 1;
inline constexpr std::uint64_t kEvaluation = 2;
inline constexpr std::uint64_t kSvdFit = 3;
}  // namespace seed_purpose

inline std::shared_ptr<Recommender> fit_model(std::shared_ptr<const Dataset> train,
                                              const ExperimentConfig& cfg,
                                              std::uint64_t fit_seed) {
  switch (cfg.algorithm) {
    case Algorithm::UserKnn: {
      KnnParams p = cfg.knn;
      p.mode = KnnMode::UserBased;
      return std::make_shared<KnnModel>(fit_knn(std::move(train), p));
    }
    case Algorithm::ItemKnn: {
      KnnParams p = cfg.knn;
      p.mode = KnnMode::ItemBased;
      return std::make_shared<KnnModel>(fit_knn(std::move(train), p));
    }
    case Algorithm::Svd: {
      SvdParams p = cfg.svd;
      p.seed = fit_seed;
      return std::make_shared<SvdModel>(fit_svd(std::move(train), p));
    }
  }
  throw InputError("experiment: unknown algorithm");
}

inline std::pair<std::vector<Rating>, std::vector<Rating>> fold_split_ratings(
    const Dataset& ds, const FoldAssignment& fa, int fold) {
  std::vector<Rating> train, test;
  for (std::size_t idx = 0; idx < ds.n_ratings(); ++idx) {
    if (fa.assignment[idx] == fold)
      test.push_back(ds.rating(static_cast<int>(idx)));
    else
      train.push_back(ds.rating(static_cast<int>(idx)));
  }
  return {std::move(train), std::move(test)};
}

// Plain k-fold cross-validation of one algorithm over the whole dataset.
inline std::vector<MetricsReport> run_cross_validation(const Dataset& ds,
                                                       const ExperimentConfig& cfg) {
  cfg.validate();
  if (ds.empty()) throw InputError("run_cross_validation: empty dataset");
  FoldAssignment fa = split_folds(ds, cfg.folds,
                                  derive_seed(cfg.master_seed, seed_purpose::kFoldSplit));
  std::vector<MetricsReport> reports;
  for (int fold = 0; fold < cfg.folds; ++fold) {
    auto [train, test] = fold_split_ratings(ds, fa, fold);
    auto train_ds = std::make_shared<Dataset>(Dataset::from_ratings(std::move(train)));
    auto model = fit_model(train_ds, cfg,
                           derive_seed(cfg.master_seed, seed_purpose::kSvdFit, fold));
    EvalParams ep = cfg.eval;
    ep.seed = derive_seed(cfg.master_seed, seed_purpose::kEvaluation, fold);
    reports.push_back(evaluate_model(*model, test, ds, ep));
  }
  return reports;
}

struct MetricPair {
  std::vector<double> pooled;       // per fold
  std::vector<double> partitioned;  // per fold
  double pooled_mean = 0.0;
  double partitioned_mean = 0.0;
  double t = 0.0;
  double p_raw = 1.0;
  double p_adjusted = 1.0;
  bool improved = false;
};

inline constexpr std::array<const char*, 3> kMetricNames = {"ndcg", "precision",
                                                            "rmse"};

struct GroupResult {
  std::string label;
  std::size_t n_users = 0;
  bool excluded = false;  // some fold had no test ratings for this group
  std::vector<std::string> warnings;
  std::array<MetricPair, 3> metrics;  // ndcg, precision, rmse
};

struct ComparisonReport {
  ExperimentConfig config;
  std::size_t n_ratings = 0;
  std::size_t n_users = 0;
  std::vector<GroupResult> groups;
  std::vector<std::string> warnings;
};

// Pooled-vs-partitioned comparison. Both arms share one fold assignment
// and identical per-(group, fold) test sets; the pooled arm trains on the
// full training split, the partitioned arm only on the group's share of
// it. Per-fold aggregate metrics are paired across arms, tested with a
// paired t-test, and Bonferroni-adjusted over the three metrics.
inline ComparisonReport run_partition_experiment(const Dataset& ds,
                                                 const ExperimentConfig& cfg) {
  cfg.validate();
  if (ds.empty()) throw InputError("run_partition_experiment: empty dataset");

  std::vector<DispositionProfile> profiles =
      profile_users(ds, cfg.scheme.threshold);
  Partition partition = partition_users(profiles, cfg.scheme);

  ComparisonReport report;
  report.config = cfg;
  report.n_ratings = ds.n_ratings();
  report.n_users = ds.n_users();
  report.groups.resize(partition.groups.size());
  for (std::size_t g = 0; g < partition.groups.size(); ++g) {
    report.groups[g].label = partition.groups[g].first;
    report.groups[g].n_users = partition.groups[g].second.size();
  }

  FoldAssignment fa = split_folds(ds, cfg.folds,
                                  derive_seed(cfg.master_seed, seed_purpose::kFoldSplit));

  for (int fold = 0; fold < cfg.folds; ++fold) {
    auto [train, test] = fold_split_ratings(ds, fa, fold);
    auto pooled_train =
        std::make_shared<Dataset>(Dataset::from_ratings(train));
    auto pooled_model = fit_model(
        pooled_train, cfg, derive_seed(cfg.master_seed, seed_purpose::kSvdFit, fold));

    EvalParams ep = cfg.eval;
    ep.seed = derive_seed(cfg.master_seed, seed_purpose::kEvaluation, fold);

    for (std::size_t g = 0; g < partition.groups.size(); ++g) {
      GroupResult& gr = report.groups[g];
      const std::set<std::int64_t> members(partition.groups[g].second.begin(),
                                           partition.groups[g].second.end());
      std::vector<Rating> group_test;
      for (const Rating& r : test)
        if (members.count(r.user_id)) group_test.push_back(r);
      if (group_test.empty()) {
        gr.excluded = true;
        gr.warnings.push_back("no test ratings in fold " + std::to_string(fold) +
                              "; group excluded from t-tests");
        for (auto& mp : gr.metrics) {
          mp.pooled.push_back(std::nan(""));
          mp.partitioned.push_back(std::nan(""));
        }
        continue;
      }

      std::vector<Rating> group_train;
      for (const Rating& r : train)
        if (members.count(r.user_id)) group_train.push_back(r);
      // A user can have all ratings in the test fold only if n_u < folds;
      // the partitioned model then sees them as cold-start, same as pooled.
      auto part_train =
          std::make_shared<Dataset>(Dataset::from_ratings(std::move(group_train)));
      auto part_model = fit_model(
          part_train, cfg,
          derive_seed(cfg.master_seed, seed_purpose::kSvdFit, fold, g + 1));

      MetricsReport pooled_r = evaluate_model(*pooled_model, group_test, ds, ep);
      MetricsReport part_r = evaluate_model(*part_model, group_test, ds, ep);
      for (const std::string& w : pooled_r.warnings) gr.warnings.push_back(w);

      gr.metrics[0].pooled.push_back(pooled_r.ndcg_mean);
      gr.metrics[0].partitioned.push_back(part_r.ndcg_mean);
      gr.metrics[1].pooled.push_back(pooled_r.precision_mean);
      gr.metrics[1].partitioned.push_back(part_r.precision_mean);
      gr.metrics[2].pooled.push_back(pooled_r.rmse);
      gr.metrics[2].partitioned.push_back(part_r.rmse);
    }
  }

  for (GroupResult& gr : report.groups) {
    for (std::size_t m = 0; m < 3; ++m) {
      MetricPair& mp = gr.metrics[m];
      auto mean = [](const std::vector<double>& v) {
        double s = 0.0;
        std::size_t n = 0;
        for (double x : v)
          if (!std::isnan(x)) {
            s += x;
            ++n;
          }
        return n > 0 ? s / static_cast<double>(n) : std::nan("");
      };
      mp.pooled_mean = mean(mp.pooled);
      mp.partitioned_mean = mean(mp.partitioned);
      const bool lower_is_better = m == 2;  // rmse
      if (!std::isnan(mp.pooled_mean) && !std::isnan(mp.partitioned_mean))
        mp.improved = lower_is_better
                          ? mp.partitioned_mean < mp.pooled_mean
                          : mp.partitioned_mean > mp.pooled_mean;
      if (gr.excluded) continue;
      TTestResult tt = paired_t_test(mp.partitioned, mp.pooled);
      mp.t = tt.t;
      mp.p_raw = tt.p;
      mp.p_adjusted = bonferroni_adjust(tt.p, 3);
    }
    if (gr.excluded)
      report.warnings.push_back("group '" + gr.label +
                                "' excluded from significance testing");
  }
  return report;
}

}  // namespace disprec
