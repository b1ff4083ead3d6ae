// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <algorithm>
#include <cstdint>
#include <memory>
#include <thread>
#include <unordered_map>
#include <vector>

#include "disprec/model.hpp"
#include "disprec/ratings.hpp"

namespace disprec {

enum class KnnMode { UserBased, ItemBased };

struct KnnParams {
  KnnMode mode = KnnMode::UserBased;
  int min_k = 1;
  int max_k = 20;
  int min_support = 1;  // minimum co-rating count for a nonzero similarity
  bool clamp = true;
  int n_threads = 0;  // 0 = hardware concurrency

  void validate() const {
    if (min_k < 1 || min_k > max_k)
      throw InputError("knn: require 1 <= min_k <= max_k");
    if (min_support < 1) throw InputError("knn: min_support must be >= 1");
  }
};

// sim = 1 / (msd + 1), zero when fewer than min_support co-ratings.
inline double msd_similarity(const std::vector<std::pair<double, double>>& common,
                             int min_support = 1) {
  if (common.size() < static_cast<std::size_t>(min_support) || common.empty())
    return 0.0;
  double msd = 0.0;
  for (const auto& [ru, rv] : common) msd += (ru - rv) * (ru - rv);
  msd /= static_cast<double>(common.size());
  return 1.0 / (msd + 1.0);
}

// Symmetric similarity matrix over the active axis. Dense packed upper
// triangle up to kDenseLimit entities; sorted sparse rows beyond that
// (the 68k-item catalog would need 37 GB dense). Representation does not
// affect results.
class SimilarityMatrix {
 public:
  static constexpr int kDenseLimit = 20000;

  explicit SimilarityMatrix(int n) : n_(n), dense_(n <= kDenseLimit) {
    if (dense_)
      data_.assign(static_cast<std::size_t>(n) * (n + 1) / 2, 0.0);
    else
      rows_.resize(n);
  }

  int size() const { return n_; }

  double get(int i, int j) const {
    if (i > j) std::swap(i, j);
    if (dense_) return data_[pack(i, j)];
    const auto& row = rows_[i];
    auto it = std::lower_bound(row.begin(), row.end(), j,
                               [](const auto& e, int v) { return e.first < v; });
    return (it != row.end() && it->first == j) ? it->second : 0.0;
  }

  // Writers fill disjoint row ranges; entries per row must arrive with
  // ascending column index i <= j.
  void set_upper(int i, int j, double v) {
    if (dense_)
      data_[pack(i, j)] = v;
    else
      rows_[i].emplace_back(j, v);
  }

  // Nonzero upper-triangle entries in (row, col) order; used by
  // serialization and the brute-force comparison tests.
  template <typename Fn>
  void for_each_nonzero_upper(Fn fn) const {
    if (dense_) {
      for (int i = 0; i < n_; ++i)
        for (int j = i; j < n_; ++j) {
          const double v = data_[pack(i, j)];
          if (v != 0.0) fn(i, j, v);
        }
    } else {
      for (int i = 0; i < n_; ++i)
        for (const auto& [j, v] : rows_[i])
          if (v != 0.0) fn(i, j, v);
    }
  }

 private:
  std::size_t pack(int i, int j) const {
    return static_cast<std::size_t>(i) * (2 * n_ - i - 1) / 2 +
           static_cast<std::size_t>(j);
  }

  int n_;
  bool dense_;
  std::vector<double> data_;
  std::vector<std::vector<std::pair<int, double>>> rows_;
};

class KnnModel : public Recommender {
 public:
  KnnModel(std::shared_ptr<const Dataset> train, KnnParams params,
           SimilarityMatrix sim)
      : train_(std::move(train)), params_(params), sim_(std::move(sim)) {}

  const KnnParams& params() const { return params_; }
  const SimilarityMatrix& similarity() const { return sim_; }
  const Dataset& train() const { return *train_; }
  std::shared_ptr<const Dataset> train_handle() const { return train_; }

  Prediction predict(std::int64_t user_id, std::int64_t item_id) const override {
    const Dataset& ds = *train_;
    const int u = ds.user_index(user_id);
    const int i = ds.item_index(item_id);
    const bool user_based = params_.mode == KnnMode::UserBased;
    const int active = user_based ? u : i;    // axis the similarity runs over
    const int opposite = user_based ? i : u;

    Prediction p;
    if (active < 0) {
      // Unknown active entity: opposite-axis mean if known, else global.
      if (opposite >= 0) {
        p.estimate = user_based ? ds.item_mean(opposite) : ds.user_mean(opposite);
        p.fallback_level = FallbackLevel::AxisMeanOnly;
      } else {
        p.estimate = ds.global_mean();
        p.fallback_level = FallbackLevel::GlobalMean;
      }
      return finish(p);
    }

    const double axis_mean =
        user_based ? ds.user_mean(active) : ds.item_mean(active);
    if (opposite < 0) {
      p.estimate = axis_mean;
      p.fallback_level = FallbackLevel::AxisMeanOnly;
      return finish(p);
    }

    // Neighbors: entities on the active axis with sim > 0 that rated the
    // opposite entity; top max_k by similarity, ties by ascending index.
    struct Neighbor {
      double sim;
      double deviation;  // r - neighbor mean
      int index;
    };
    std::vector<Neighbor> candidates;
    const auto& opposite_ratings = user_based
                                       ? ds.item_rating_indices(opposite)
                                       : ds.user_rating_indices(opposite);
    for (int ridx : opposite_ratings) {
      const Rating& r = ds.rating(ridx);
      const int v = user_based ? ds.user_index(r.user_id) : ds.item_index(r.item_id);
      if (v == active) continue;
      const double s = sim_.get(active, v);
      if (s <= 0.0) continue;
      const double mean_v = user_based ? ds.user_mean(v) : ds.item_mean(v);
      candidates.push_back({s, r.value - mean_v, v});
    }
    if (candidates.size() < static_cast<std::size_t>(params_.min_k)) {
      p.estimate = axis_mean;
      p.fallback_level = FallbackLevel::AxisMeanOnly;
      return finish(p);
    }
    const std::size_t take =
        std::min(candidates.size(), static_cast<std::size_t>(params_.max_k));
    std::partial_sort(candidates.begin(), candidates.begin() + take,
                      candidates.end(), [](const Neighbor& a, const Neighbor& b) {
                        if (a.sim != b.sim) return a.sim > b.sim;
                        return a.index < b.index;
                      });
    double num = 0.0, den = 0.0;
    for (std::size_t t = 0; t < take; ++t) {
      num += candidates[t].sim * candidates[t].deviation;
      den += candidates[t].sim;
    }
    p.estimate = axis_mean + num / den;
    p.fallback_level = FallbackLevel::Full;
    return finish(p);
  }

 private:
  Prediction finish(Prediction p) const {
    if (params_.clamp) p.estimate = clamp_rating(p.estimate);
    return p;
  }

  std::shared_ptr<const Dataset> train_;
  KnnParams params_;
  SimilarityMatrix sim_;
};

namespace detail {

// Builds one row of the upper triangle: co-rating sums of entity `a`
// against every entity b > a, via the inverted index. Accumulation order
// is fixed by the rating lists, independent of threading.
inline void similarity_row(const Dataset& ds, bool user_based, int a,
                           int min_support, std::vector<double>& sq_sum,
                           std::vector<int>& count, std::vector<int>& touched,
                           SimilarityMatrix& out) {
  touched.clear();
  const auto& own = user_based ? ds.user_rating_indices(a)
                               : ds.item_rating_indices(a);
  for (int ridx : own) {
    const Rating& r = ds.rating(ridx);
    const double ra = r.value;
    const auto& other = user_based
                            ? ds.item_rating_indices(ds.item_index(r.item_id))
                            : ds.user_rating_indices(ds.user_index(r.user_id));
    for (int oidx : other) {
      const Rating& ro = ds.rating(oidx);
      const int b = user_based ? ds.user_index(ro.user_id) : ds.item_index(ro.item_id);
      if (b <= a) continue;
      if (count[b] == 0) touched.push_back(b);
      const double d = ra - ro.value;
      sq_sum[b] += d * d;
      count[b] += 1;
    }
  }
  std::sort(touched.begin(), touched.end());
  out.set_upper(a, a, own.empty() ? 0.0 : 1.0);
  for (int b : touched) {
    if (count[b] >= min_support) {
      const double msd = sq_sum[b] / count[b];
      out.set_upper(a, b, 1.0 / (msd + 1.0));
    }
    sq_sum[b] = 0.0;
    count[b] = 0;
  }
}

}  // namespace detail

inline KnnModel fit_knn(std::shared_ptr<const Dataset> train, KnnParams params) {
  params.validate();
  if (!train || train->empty()) throw InputError("fit_knn: empty training set");
  const Dataset& ds = *train;
  const bool user_based = params.mode == KnnMode::UserBased;
  const int n = static_cast<int>(user_based ? ds.n_users() : ds.n_items());
  SimilarityMatrix sim(n);

  int n_threads = params.n_threads > 0
                      ? params.n_threads
                      : static_cast<int>(std::thread::hardware_concurrency());
  if (n_threads < 1) n_threads = 1;
  n_threads = std::min(n_threads, n);

  auto worker = [&](int lo, int hi) {
    std::vector<double> sq_sum(n, 0.0);
    std::vector<int> count(n, 0);
    std::vector<int> touched;
    for (int a = lo; a < hi; ++a)
      detail::similarity_row(ds, user_based, a, params.min_support, sq_sum,
                             count, touched, sim);
  };
  if (n_threads == 1) {
    worker(0, n);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (n + n_threads - 1) / n_threads;
    for (int t = 0; t < n_threads; ++t) {
      const int lo = t * chunk;
      const int hi = std::min(n, lo + chunk);
      if (lo < hi) pool.emplace_back(worker, lo, hi);
    }
    for (auto& th : pool) th.join();
  }
  return KnnModel(std::move(train), params, std::move(sim));
}

}  // namespace disprec
