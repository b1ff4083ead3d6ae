// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <cmath>
#include <cstdint>
#include <istream>
#include <string>
#include <unordered_set>
#include <vector>

#include "disprec/ratings.hpp"
#include "disprec/rng.hpp"

namespace disprec {

// One synthetic subpopulation. Ratings are drawn around `rating_mean` with a
// population-private item preference vector plus user noise, then an optional
// negative skew term, snapped to the half-star grid and clamped to [0.5, 5].
struct PopulationSpec {
  std::string name;
  int n_users = 0;
  int min_items = 0;
  int max_items = 0;
  double rating_mean = 3.5;
  double rating_spread = 0.7;
  double negative_skew = 0.0;
  // Correlation of this population's item preferences with a catalog-wide
  // quality axis, in [-1, 1]. 0 gives independent preferences; opposite
  // signs make two populations disagree about the same items.
  double preference_align = 0.0;
};

struct SyntheticConfig {
  std::vector<PopulationSpec> populations;
  int catalog_size = 0;
  std::uint64_t seed = 0;

  void validate() const {
    if (catalog_size <= 0) throw InputError("synthetic: catalog_size must be positive");
    if (populations.empty()) throw InputError("synthetic: no populations");
    for (const auto& p : populations) {
      if (p.n_users <= 0) throw InputError("synthetic: users must be positive in '" + p.name + "'");
      if (p.min_items <= 0 || p.max_items < p.min_items)
        throw InputError("synthetic: bad items range in '" + p.name + "'");
      if (p.max_items > catalog_size)
        throw InputError("synthetic: items per user exceeds catalog size in '" + p.name + "'");
      if (p.rating_mean < 0.5 || p.rating_mean > 5.0)
        throw InputError("synthetic: mean out of [0.5, 5.0] in '" + p.name + "'");
      if (p.rating_spread < 0.0 || p.negative_skew < 0.0)
        throw InputError("synthetic: spread/skew must be non-negative in '" + p.name + "'");
      if (p.preference_align < -1.0 || p.preference_align > 1.0)
        throw InputError("synthetic: preference_align out of [-1, 1] in '" + p.name + "'");
    }
  }
};

// Flat key-value config with `[population NAME]` sections:
//
//   catalog_size = 400
//   seed = 42
//   [population optimists]
//   users = 200
//   min_items = 30
//   max_items = 60
//   mean = 4.0
//   spread = 0.7
//   negative_skew = 0.0
inline SyntheticConfig parse_synthetic_config(std::istream& in) {
  SyntheticConfig cfg;
  PopulationSpec* cur = nullptr;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    auto last = line.find_last_not_of(" \t\r");
    std::string s = line.substr(first, last - first + 1);
    if (s[0] == '#') continue;
    if (s.front() == '[') {
      if (s.back() != ']' || s.rfind("[population ", 0) != 0)
        throw InputError("line " + std::to_string(line_no) +
                         ": expected [population NAME]");
      cfg.populations.emplace_back();
      cur = &cfg.populations.back();
      cur->name = s.substr(12, s.size() - 13);
      continue;
    }
    auto eq = s.find('=');
    if (eq == std::string::npos)
      throw InputError("line " + std::to_string(line_no) + ": expected key = value");
    auto trim = [](std::string t) {
      auto a = t.find_first_not_of(" \t");
      auto b = t.find_last_not_of(" \t");
      return a == std::string::npos ? std::string() : t.substr(a, b - a + 1);
    };
    std::string key = trim(s.substr(0, eq));
    std::string val = trim(s.substr(eq + 1));
    try {
      if (!cur) {
        if (key == "catalog_size") cfg.catalog_size = std::stoi(val);
        else if (key == "seed") cfg.seed = std::stoull(val);
        else throw InputError("");
      } else {
        if (key == "users") cur->n_users = std::stoi(val);
        else if (key == "min_items") cur->min_items = std::stoi(val);
        else if (key == "max_items") cur->max_items = std::stoi(val);
        else if (key == "mean") cur->rating_mean = std::stod(val);
        else if (key == "spread") cur->rating_spread = std::stod(val);
        else if (key == "negative_skew") cur->negative_skew = std::stod(val);
        else if (key == "preference_align") cur->preference_align = std::stod(val);
        else throw InputError("");
      }
    } catch (const std::exception&) {
      throw InputError("line " + std::to_string(line_no) + ": bad entry '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

inline double snap_to_grid(double v) {
  double snapped = std::round(v * 2.0) / 2.0;
  if (snapped < 0.5) snapped = 0.5;
  if (snapped > 5.0) snapped = 5.0;
  return snapped;
}

// Item ids are 1..catalog_size; user ids are assigned sequentially across
// populations starting at 1. Each population gets a private item preference
// vector, so co-ratings correlate within a population but not across them.
inline Dataset generate_synthetic(const SyntheticConfig& cfg) {
  cfg.validate();
  std::vector<Rating> ratings;
  std::int64_t next_user = 1;
  Rng quality_rng(derive_seed(cfg.seed, 0));
  std::vector<double> quality(cfg.catalog_size);
  for (double& q : quality) q = quality_rng.gaussian();
  for (std::size_t pi = 0; pi < cfg.populations.size(); ++pi) {
    const PopulationSpec& pop = cfg.populations[pi];
    Rng pref_rng(derive_seed(cfg.seed, 1, pi));
    const double align = pop.preference_align;
    const double own = std::sqrt(1.0 - align * align);
    std::vector<double> pref(cfg.catalog_size);
    for (std::size_t it = 0; it < pref.size(); ++it)
      pref[it] = align * quality[it] + own * pref_rng.gaussian();

    for (int uj = 0; uj < pop.n_users; ++uj) {
      Rng rng(derive_seed(cfg.seed, 2, pi, uj));
      std::int64_t user_id = next_user++;
      int n_items = pop.min_items +
                    static_cast<int>(rng.below(pop.max_items - pop.min_items + 1));
      std::unordered_set<int> chosen;
      chosen.reserve(n_items * 2);
      while (static_cast<int>(chosen.size()) < n_items)
        chosen.insert(static_cast<int>(rng.below(cfg.catalog_size)));
      std::vector<int> items(chosen.begin(), chosen.end());
      std::sort(items.begin(), items.end());
      for (int it : items) {
        double raw = pop.rating_mean +
                     pop.rating_spread * (pref[it] + 0.5 * rng.gaussian()) -
                     pop.negative_skew * std::abs(rng.gaussian());
        Rating r;
        r.user_id = user_id;
        r.item_id = it + 1;
        r.value = snap_to_grid(raw);
        ratings.push_back(r);
      }
    }
  }
  return Dataset::from_ratings(std::move(ratings));
}

}  // namespace disprec
