// Apache License, Version 2.0, refer to LICENSE.txt
#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "disprec/experiment.hpp"
#include "disprec/report_io.hpp"
#include "disprec/synthetic.hpp"

using namespace disprec;

namespace {

Dataset small_two_pop(std::uint64_t seed = 101) {
  SyntheticConfig cfg;
  cfg.catalog_size = 60;
  cfg.seed = seed;
  cfg.populations.push_back({"opt", 20, 10, 20, 4.1, 0.6, 0.0});
  cfg.populations.push_back({"pes", 20, 10, 20, 2.6, 0.6, 0.4});
  return generate_synthetic(cfg);
}

ExperimentConfig base_config() {
  ExperimentConfig cfg;
  cfg.algorithm = Algorithm::UserKnn;
  cfg.scheme.variant = PartitionScheme::Variant::Binary;
  cfg.folds = 5;
  cfg.master_seed = 9;
  return cfg;
}

}  // namespace

TEST_CASE("run_cross_validation fold accounting and determinism") {
  Dataset ds = small_two_pop();
  ExperimentConfig cfg = base_config();
  auto reports = run_cross_validation(ds, cfg);
  REQUIRE(reports.size() == 5);
  std::size_t total_pairs = 0;
  for (const auto& r : reports) total_pairs += r.n_pairs;
  CHECK(total_pairs == ds.n_ratings());

  auto again = run_cross_validation(ds, cfg);
  for (std::size_t f = 0; f < 5; ++f) {
    CHECK(reports[f].ndcg_mean == again[f].ndcg_mean);
    CHECK(reports[f].precision_mean == again[f].precision_mean);
    CHECK(reports[f].rmse == again[f].rmse);
  }
}

TEST_CASE("constant-rating dataset gives zero RMSE for mean models") {
  std::vector<Rating> rs;
  for (int u = 1; u <= 6; ++u)
    for (int i = 1; i <= 10; ++i)
      rs.push_back({u, i, 3.0, std::nullopt});
  Dataset ds = Dataset::from_ratings(std::move(rs));
  ExperimentConfig cfg = base_config();
  cfg.folds = 2;
  auto reports = run_cross_validation(ds, cfg);
  for (const auto& r : reports) CHECK(r.rmse == doctest::Approx(0.0));
}

TEST_CASE("identity partition makes both arms coincide") {
  Dataset ds = small_two_pop();
  ExperimentConfig cfg = base_config();
  cfg.scheme.variant = PartitionScheme::Variant::Identity;
  ComparisonReport rep = run_partition_experiment(ds, cfg);
  REQUIRE(rep.groups.size() == 1);
  const GroupResult& g = rep.groups[0];
  CHECK(!g.excluded);
  for (const MetricPair& mp : g.metrics) {
    for (std::size_t f = 0; f < mp.pooled.size(); ++f)
      CHECK(mp.pooled[f] == mp.partitioned[f]);
    CHECK(mp.t == 0.0);
    CHECK(mp.p_raw == 1.0);
    CHECK(mp.p_adjusted == 1.0);
  }
}

TEST_CASE("binary partition structure and pairing") {
  Dataset ds = small_two_pop();
  ExperimentConfig cfg = base_config();
  ComparisonReport rep = run_partition_experiment(ds, cfg);
  REQUIRE(rep.groups.size() == 2);
  for (const GroupResult& g : rep.groups) {
    for (const MetricPair& mp : g.metrics) {
      CHECK(mp.pooled.size() == 5);
      CHECK(mp.partitioned.size() == 5);
    }
  }
  CHECK(rep.groups[0].n_users + rep.groups[1].n_users == ds.n_users());
}

TEST_CASE("partitioned training sets union to the pooled training set") {
  Dataset ds = small_two_pop();
  auto profiles = profile_users(ds);
  for (auto variant :
       {PartitionScheme::Variant::Binary, PartitionScheme::Variant::NegBucket,
        PartitionScheme::Variant::PositivePeak}) {
    Partition part = partition_users(profiles, {variant});
    FoldAssignment fa = split_folds(ds, 5, derive_seed(9, seed_purpose::kFoldSplit));
    for (int fold = 0; fold < 5; ++fold) {
      auto [train, test] = fold_split_ratings(ds, fa, fold);
      std::size_t union_size = 0;
      for (const auto& [label, users] : part.groups) {
        const std::set<std::int64_t> members(users.begin(), users.end());
        for (const Rating& r : train)
          if (members.count(r.user_id)) ++union_size;
      }
      CHECK(union_size == train.size());
    }
  }
}

TEST_CASE("comparison report is byte-identical across repeated runs") {
  Dataset ds = small_two_pop();
  ExperimentConfig cfg = base_config();
  ComparisonReport a = run_partition_experiment(ds, cfg);
  ComparisonReport b = run_partition_experiment(ds, cfg);
  std::ostringstream ja, jb, ca, cb, ta, tb;
  write_report_json(a, ja);
  write_report_json(b, jb);
  write_report_csv(a, ca);
  write_report_csv(b, cb);
  write_report_table(a, ta);
  write_report_table(b, tb);
  CHECK(ja.str() == jb.str());
  CHECK(ca.str() == cb.str());
  CHECK(ta.str() == tb.str());
}

TEST_CASE("empty-fold groups are excluded with a warning") {
  // One lonely pessimistic user with fewer ratings than folds: some fold
  // has no test ratings for that group.
  std::vector<Rating> rs;
  for (int u = 1; u <= 8; ++u)
    for (int i = 1; i <= 12; ++i)
      rs.push_back({u, i, 4.0 + 0.5 * ((u + i) % 2), std::nullopt});
  rs.push_back({99, 1, 1.0, std::nullopt});
  rs.push_back({99, 2, 2.0, std::nullopt});
  Dataset ds = Dataset::from_ratings(std::move(rs));
  ExperimentConfig cfg = base_config();
  ComparisonReport rep = run_partition_experiment(ds, cfg);
  REQUIRE(rep.groups.size() == 2);
  CHECK(rep.groups[1].label == "pessimistic");
  CHECK(rep.groups[1].excluded);
  CHECK(!rep.warnings.empty());
}

TEST_CASE("report JSON embeds full provenance") {
  Dataset ds = small_two_pop();
  ExperimentConfig cfg = base_config();
  ComparisonReport rep = run_partition_experiment(ds, cfg);
  nlohmann::json j = report_to_json(rep);
  CHECK(j["config"]["algorithm"] == "user-knn");
  CHECK(j["config"]["master_seed"] == "9");
  CHECK(j["config"]["folds"] == "5");
  CHECK(j["dataset"]["n_users"] == ds.n_users());
  REQUIRE(j["groups"].size() == 2);
  CHECK(j["groups"][0]["ndcg"]["pooled_folds"].size() == 5);
}
