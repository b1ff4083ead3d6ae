// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <thread>
#include <unordered_set>
#include <vector>

#include "disprec/model.hpp"
#include "disprec/ratings.hpp"
#include "disprec/rng.hpp"

namespace disprec {

struct EvalParams {
  int k = 8;
  double relevance_threshold = 3.5;  // half-star grid
  double padding_ratio = 1.0;
  std::uint64_t seed = 0;
  bool graded_gains = false;  // default binary gains; padded items always 0
  int n_threads = 0;          // 0 = hardware concurrency

  void validate() const {
    if (k < 1) throw InputError("eval: k must be >= 1");
    if (!on_half_star_grid(relevance_threshold))
      throw InputError("eval: relevance threshold off the half-star grid");
    if (padding_ratio < 0.0) throw InputError("eval: padding_ratio must be >= 0");
  }
};

inline double rmse(const std::vector<std::pair<double, double>>& pairs) {
  if (pairs.empty()) throw InputError("rmse: no pairs");
  double ss = 0.0;
  for (const auto& [actual, predicted] : pairs) {
    const double e = actual - predicted;
    ss += e * e;
  }
  return std::sqrt(ss / static_cast<double>(pairs.size()));
}

inline double precision_at_k(const std::vector<std::int64_t>& ranked,
                             const std::set<std::int64_t>& relevant, int k) {
  if (ranked.empty()) throw InputError("precision_at_k: empty ranking");
  const std::size_t take = std::min<std::size_t>(k, ranked.size());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < take; ++i)
    if (relevant.count(ranked[i])) ++hits;
  return static_cast<double>(hits) / static_cast<double>(take);
}

// Binary or graded gains per item; items absent from `gain` score 0.
// NDCG = DCG@k / IDCG@k over the same candidate pool; 0 when IDCG is 0.
inline double ndcg_at_k(const std::vector<std::int64_t>& ranked,
                        const std::map<std::int64_t, double>& gain, int k) {
  if (ranked.empty()) throw InputError("ndcg_at_k: empty ranking");
  const std::size_t take = std::min<std::size_t>(k, ranked.size());
  double dcg = 0.0;
  std::vector<double> gains;
  gains.reserve(ranked.size());
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    auto it = gain.find(ranked[i]);
    const double g = it == gain.end() ? 0.0 : it->second;
    gains.push_back(g);
    if (i < take) dcg += g / std::log2(static_cast<double>(i) + 2.0);
  }
  std::sort(gains.begin(), gains.end(), std::greater<double>());
  double idcg = 0.0;
  for (std::size_t i = 0; i < take; ++i)
    idcg += gains[i] / std::log2(static_cast<double>(i) + 2.0);
  return idcg > 0.0 ? dcg / idcg : 0.0;
}

struct CandidateList {
  std::vector<std::int64_t> ranked;  // descending score, ties by item index
  bool padding_exhausted = false;    // fewer unrated items than requested
};

// Candidate pool = test items plus ceil(padding_ratio * |test|) items the
// user never rated anywhere in `full` (train or test), sampled uniformly
// without replacement with the given seed. Scored by the model, sorted by
// descending estimate with ties broken by ascending dense item index.
inline CandidateList build_candidates(const Recommender& model,
                                      std::int64_t user_id,
                                      const std::vector<std::int64_t>& test_items,
                                      const Dataset& full, double padding_ratio,
                                      std::uint64_t seed) {
  if (test_items.empty())
    throw InputError("build_candidates: user has no test items");
  CandidateList out;
  std::unordered_set<std::int64_t> pool(test_items.begin(), test_items.end());
  std::vector<std::int64_t> candidates(test_items);

  std::unordered_set<int> rated_dense;
  const int u = full.user_index(user_id);
  if (u >= 0)
    for (int ridx : full.user_rating_indices(u))
      rated_dense.insert(full.item_index(full.rating(ridx).item_id));

  const std::size_t want = static_cast<std::size_t>(
      std::ceil(padding_ratio * static_cast<double>(test_items.size())));
  const std::size_t catalog = full.n_items();
  std::size_t available = catalog - rated_dense.size();
  // Padding candidates already in the pool (test items unrated in full)
  // cannot be drawn twice; count them out of the available set.
  for (std::int64_t it : test_items) {
    const int d = full.item_index(it);
    if (d >= 0 && !rated_dense.count(d)) --available;
  }

  Rng rng(seed);
  if (available <= want) {
    // Take everything unrated; deterministic order, warning recorded.
    for (std::size_t d = 0; d < catalog; ++d) {
      const std::int64_t id = full.item_ids()[d];
      if (!rated_dense.count(static_cast<int>(d)) && !pool.count(id)) {
        pool.insert(id);
        candidates.push_back(id);
      }
    }
    out.padding_exhausted = available < want;
  } else {
    std::size_t added = 0;
    while (added < want) {
      const int d = static_cast<int>(rng.below(catalog));
      if (rated_dense.count(d)) continue;
      const std::int64_t id = full.item_ids()[d];
      if (!pool.insert(id).second) continue;
      candidates.push_back(id);
      ++added;
    }
  }

  struct Scored {
    std::int64_t id;
    double score;
    int dense;
  };
  std::vector<Scored> scored;
  scored.reserve(candidates.size());
  for (std::int64_t id : candidates) {
    const int d = full.item_index(id);
    scored.push_back({id, model.predict(user_id, id).estimate, d});
  }
  std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.dense < b.dense;
  });
  out.ranked.reserve(scored.size());
  for (const Scored& s : scored) out.ranked.push_back(s.id);
  return out;
}

struct UserMetrics {
  std::int64_t user_id = 0;
  double ndcg = 0.0;
  double precision = 0.0;
  int n_test = 0;
};

struct MetricsReport {
  std::vector<UserMetrics> per_user;
  double ndcg_mean = 0.0;       // mean over users
  double precision_mean = 0.0;  // mean over users
  double rmse = 0.0;            // pooled over raw test pairs
  std::size_t n_users = 0;
  std::size_t n_pairs = 0;
  std::vector<std::string> warnings;
};

// Evaluates one model on held-out ratings. Rank metrics use per-user
// candidate pools with unrated-item padding; RMSE is pooled over the raw
// test pairs only (padded items never enter RMSE). Per-user padding seeds
// derive from params.seed and the user id, so results do not depend on
// scheduling or on which groups are evaluated together.
inline MetricsReport evaluate_model(const Recommender& model,
                                    const std::vector<Rating>& test,
                                    const Dataset& full, EvalParams params) {
  params.validate();
  if (test.empty()) throw InputError("evaluate_model: empty test set");

  std::map<std::int64_t, std::vector<const Rating*>> by_user;
  for (const Rating& r : test) by_user[r.user_id].push_back(&r);
  std::vector<std::pair<std::int64_t, std::vector<const Rating*>>> users(
      by_user.begin(), by_user.end());

  MetricsReport report;
  report.per_user.resize(users.size());
  std::vector<std::uint8_t> exhausted(users.size(), 0);

  auto eval_user = [&](std::size_t idx) {
    const auto& [user_id, ratings] = users[idx];
    std::vector<std::int64_t> test_items;
    std::map<std::int64_t, double> gain;
    std::set<std::int64_t> relevant;
    for (const Rating* r : ratings) {
      test_items.push_back(r->item_id);
      if (r->value >= params.relevance_threshold) {
        relevant.insert(r->item_id);
        gain[r->item_id] = params.graded_gains ? r->value : 1.0;
      }
    }
    CandidateList cl = build_candidates(
        model, user_id, test_items, full, params.padding_ratio,
        derive_seed(params.seed, static_cast<std::uint64_t>(user_id)));
    UserMetrics um;
    um.user_id = user_id;
    um.n_test = static_cast<int>(test_items.size());
    um.ndcg = ndcg_at_k(cl.ranked, gain, params.k);
    um.precision = precision_at_k(cl.ranked, relevant, params.k);
    report.per_user[idx] = um;
    exhausted[idx] = cl.padding_exhausted ? 1 : 0;
  };

  int n_threads = params.n_threads > 0
                      ? params.n_threads
                      : static_cast<int>(std::thread::hardware_concurrency());
  if (n_threads < 1) n_threads = 1;
  n_threads = std::min<int>(n_threads, static_cast<int>(users.size()));
  if (n_threads <= 1) {
    for (std::size_t i = 0; i < users.size(); ++i) eval_user(i);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (users.size() + n_threads - 1) / n_threads;
    for (int t = 0; t < n_threads; ++t) {
      const std::size_t lo = t * chunk;
      const std::size_t hi = std::min(users.size(), lo + chunk);
      if (lo < hi)
        pool.emplace_back([&, lo, hi] {
          for (std::size_t i = lo; i < hi; ++i) eval_user(i);
        });
    }
    for (auto& th : pool) th.join();
  }

  std::vector<std::pair<double, double>> pairs;
  pairs.reserve(test.size());
  for (const Rating& r : test)
    pairs.emplace_back(r.value, model.predict(r.user_id, r.item_id).estimate);
  report.rmse = rmse(pairs);

  double ndcg_sum = 0.0, prec_sum = 0.0;
  for (const UserMetrics& um : report.per_user) {
    ndcg_sum += um.ndcg;
    prec_sum += um.precision;
  }
  report.n_users = users.size();
  report.n_pairs = test.size();
  report.ndcg_mean = ndcg_sum / static_cast<double>(users.size());
  report.precision_mean = prec_sum / static_cast<double>(users.size());
  std::size_t n_exhausted = 0;
  for (auto e : exhausted) n_exhausted += e;
  if (n_exhausted > 0)
    report.warnings.push_back(std::to_string(n_exhausted) +
                              " user(s) had fewer unrated items than requested padding");
  return report;
}

}  // namespace disprec
