// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "disprec/rng.hpp"

namespace disprec {

// Input / format problems (bad CSV rows, off-grid ratings, bad configs).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Rating {
  std::int64_t user_id = 0;
  std::int64_t item_id = 0;
  double value = 0.0;  // half-star grid, 0.5 .. 5.0
  std::optional<std::int64_t> timestamp;
};

inline bool on_half_star_grid(double v) {
  const double doubled = v * 2.0;
  const double rounded = std::round(doubled);
  return std::abs(doubled - rounded) < 1e-9 && rounded >= 1.0 && rounded <= 10.0;
}

// Immutable rating collection with dense user/item indices (first-seen order)
// and precomputed per-axis means. Safe to share across threads once built.
class Dataset {
 public:
  static Dataset from_ratings(std::vector<Rating> ratings) {
    Dataset ds;
    ds.ratings_ = std::move(ratings);
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(ds.ratings_.size() * 2);
    for (std::size_t idx = 0; idx < ds.ratings_.size(); ++idx) {
      const Rating& r = ds.ratings_[idx];
      if (!on_half_star_grid(r.value)) {
        throw InputError("rating value off the half-star grid: " +
                         std::to_string(r.value));
      }
      int u = ds.intern(ds.user_index_, ds.user_ids_, r.user_id);
      int i = ds.intern(ds.item_index_, ds.item_ids_, r.item_id);
      // Pair key assumes dense indices fit in 32 bits each.
      std::uint64_t key = (static_cast<std::uint64_t>(u) << 32) |
                          static_cast<std::uint32_t>(i);
      if (!seen.insert(key).second) {
        throw InputError("duplicate (user,item) pair: user " +
                         std::to_string(r.user_id) + ", item " +
                         std::to_string(r.item_id));
      }
      if (static_cast<std::size_t>(u) >= ds.user_ratings_.size())
        ds.user_ratings_.emplace_back();
      if (static_cast<std::size_t>(i) >= ds.item_ratings_.size())
        ds.item_ratings_.emplace_back();
      ds.user_ratings_[u].push_back(static_cast<int>(idx));
      ds.item_ratings_[i].push_back(static_cast<int>(idx));
    }
    ds.compute_means();
    return ds;
  }

  std::size_t n_ratings() const { return ratings_.size(); }
  std::size_t n_users() const { return user_ids_.size(); }
  std::size_t n_items() const { return item_ids_.size(); }
  bool empty() const { return ratings_.empty(); }

  const std::vector<Rating>& ratings() const { return ratings_; }
  const Rating& rating(int idx) const { return ratings_[idx]; }

  const std::vector<std::int64_t>& user_ids() const { return user_ids_; }
  const std::vector<std::int64_t>& item_ids() const { return item_ids_; }

  // Dense index lookups; -1 when the id is unknown.
  int user_index(std::int64_t user_id) const {
    auto it = user_index_.find(user_id);
    return it == user_index_.end() ? -1 : it->second;
  }
  int item_index(std::int64_t item_id) const {
    auto it = item_index_.find(item_id);
    return it == item_index_.end() ? -1 : it->second;
  }

  double global_mean() const { return global_mean_; }
  double user_mean(int u) const { return user_mean_[u]; }
  double item_mean(int i) const { return item_mean_[i]; }

  // Rating indices of one user / one item, in insertion order.
  const std::vector<int>& user_rating_indices(int u) const {
    return user_ratings_[u];
  }
  const std::vector<int>& item_rating_indices(int i) const {
    return item_ratings_[i];
  }

  std::vector<double> user_rating_values(int u) const {
    std::vector<double> out;
    out.reserve(user_ratings_[u].size());
    for (int idx : user_ratings_[u]) out.push_back(ratings_[idx].value);
    return out;
  }

 private:
  Dataset() = default;

  int intern(std::unordered_map<std::int64_t, int>& index,
             std::vector<std::int64_t>& ids, std::int64_t id) {
    auto [it, inserted] = index.emplace(id, static_cast<int>(ids.size()));
    if (inserted) ids.push_back(id);
    return it->second;
  }

  void compute_means() {
    double total = 0.0;
    user_mean_.assign(n_users(), 0.0);
    item_mean_.assign(n_items(), 0.0);
    for (std::size_t u = 0; u < n_users(); ++u) {
      double s = 0.0;
      for (int idx : user_ratings_[u]) s += ratings_[idx].value;
      user_mean_[u] = user_ratings_[u].empty() ? 0.0 : s / user_ratings_[u].size();
      total += s;
    }
    for (std::size_t i = 0; i < n_items(); ++i) {
      double s = 0.0;
      for (int idx : item_ratings_[i]) s += ratings_[idx].value;
      item_mean_[i] = item_ratings_[i].empty() ? 0.0 : s / item_ratings_[i].size();
    }
    global_mean_ = ratings_.empty() ? 0.0 : total / ratings_.size();
  }

  std::vector<Rating> ratings_;
  std::vector<std::int64_t> user_ids_, item_ids_;
  std::unordered_map<std::int64_t, int> user_index_, item_index_;
  std::vector<std::vector<int>> user_ratings_, item_ratings_;
  std::vector<double> user_mean_, item_mean_;
  double global_mean_ = 0.0;
};

namespace detail {

inline std::int64_t parse_int(const std::string& s, int line,
                              const char* what) {
  std::size_t pos = 0;
  std::int64_t v = 0;
  try {
    v = std::stoll(s, &pos);
  } catch (const std::exception&) {
    throw InputError("line " + std::to_string(line) + ": malformed " + what +
                     " '" + s + "'");
  }
  if (pos != s.size())
    throw InputError("line " + std::to_string(line) + ": malformed " + what +
                     " '" + s + "'");
  return v;
}

inline double parse_double(const std::string& s, int line, const char* what) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw InputError("line " + std::to_string(line) + ": malformed " + what +
                     " '" + s + "'");
  }
  if (pos != s.size())
    throw InputError("line " + std::to_string(line) + ": malformed " + what +
                     " '" + s + "'");
  return v;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

}  // namespace detail

// Parses `userId,movieId,rating,timestamp` CSV (header required). The
// timestamp column may be empty. Errors carry 1-based line numbers.
inline Dataset parse_ratings_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InputError("empty input: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "userId,movieId,rating,timestamp")
    throw InputError("line 1: expected header 'userId,movieId,rating,timestamp'");

  std::vector<Rating> ratings;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = detail::split_csv_line(line);
    if (fields.size() != 4)
      throw InputError("line " + std::to_string(line_no) +
                       ": expected 4 fields, got " +
                       std::to_string(fields.size()));
    Rating r;
    r.user_id = detail::parse_int(fields[0], line_no, "userId");
    r.item_id = detail::parse_int(fields[1], line_no, "movieId");
    r.value = detail::parse_double(fields[2], line_no, "rating");
    if (!on_half_star_grid(r.value))
      throw InputError("line " + std::to_string(line_no) + ": rating " +
                       fields[2] + " is off the half-star grid");
    if (!fields[3].empty())
      r.timestamp = detail::parse_int(fields[3], line_no, "timestamp");
    ratings.push_back(r);
  }
  return Dataset::from_ratings(std::move(ratings));
}

// Ratings rendered with one decimal, matching the ingestion format.
inline void serialize_ratings_csv(const Dataset& ds, std::ostream& out) {
  out << "userId,movieId,rating,timestamp\n";
  char buf[32];
  for (const Rating& r : ds.ratings()) {
    std::snprintf(buf, sizeof(buf), "%.1f", r.value);
    out << r.user_id << ',' << r.item_id << ',' << buf << ',';
    if (r.timestamp) out << *r.timestamp;
    out << '\n';
  }
}

struct StatsSummary {
  std::size_t n_ratings = 0;
  std::size_t n_users = 0;
  std::size_t n_items = 0;
  double global_mean = 0.0;
  double median = 0.0;  // lower-of-two rule for even counts
  std::map<int, int> user_rating_count_hist;  // ratings-per-user -> #users
};

inline StatsSummary dataset_stats(const Dataset& ds) {
  if (ds.empty()) throw InputError("dataset_stats: empty dataset");
  StatsSummary s;
  s.n_ratings = ds.n_ratings();
  s.n_users = ds.n_users();
  s.n_items = ds.n_items();
  s.global_mean = ds.global_mean();
  std::vector<double> values;
  values.reserve(ds.n_ratings());
  for (const Rating& r : ds.ratings()) values.push_back(r.value);
  std::sort(values.begin(), values.end());
  s.median = values[(values.size() - 1) / 2];
  for (std::size_t u = 0; u < ds.n_users(); ++u)
    s.user_rating_count_hist[static_cast<int>(ds.user_rating_indices(static_cast<int>(u)).size())]++;
  return s;
}

struct FoldAssignment {
  int k = 0;
  std::vector<int> assignment;  // per rating index, in [0, k)
  std::uint64_t seed = 0;
};

// Per-user stratified k-fold split. Each user's ratings are ordered by item
// id, shuffled with a per-user seeded RNG, and dealt round-robin from a
// random start fold. Depends only on the per-user item sets, not input order.
inline FoldAssignment split_folds(const Dataset& ds, int k, std::uint64_t seed) {
  if (k < 2) throw InputError("split_folds: k must be >= 2");
  if (ds.empty()) throw InputError("split_folds: empty dataset");
  FoldAssignment fa;
  fa.k = k;
  fa.seed = seed;
  fa.assignment.assign(ds.n_ratings(), -1);
  for (std::size_t u = 0; u < ds.n_users(); ++u) {
    std::vector<int> idxs = ds.user_rating_indices(static_cast<int>(u));
    std::sort(idxs.begin(), idxs.end(), [&](int a, int b) {
      return ds.rating(a).item_id < ds.rating(b).item_id;
    });
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(ds.user_ids()[u])));
    shuffle(idxs, rng);
    int start = static_cast<int>(rng.below(static_cast<std::size_t>(k)));
    for (std::size_t j = 0; j < idxs.size(); ++j)
      fa.assignment[idxs[j]] = static_cast<int>((start + j) % k);
  }
  return fa;
}

inline Dataset filter_by_users(const Dataset& ds,
                               const std::set<std::int64_t>& users) {
  for (std::int64_t u : users) {
    if (ds.user_index(u) < 0)
      throw InputError("filter_by_users: unknown user " + std::to_string(u));
  }
  std::vector<Rating> kept;
  for (const Rating& r : ds.ratings())
    if (users.count(r.user_id)) kept.push_back(r);
  return Dataset::from_ratings(std::move(kept));
}

}  // namespace disprec
