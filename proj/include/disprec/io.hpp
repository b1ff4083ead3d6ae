// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <cstdint>
#include <cstring>
#include <istream>
#include <memory>
#include <ostream>
#include <string>

#include "disprec/knn.hpp"
#include "disprec/ratings.hpp"
#include "disprec/svd.hpp"

// Version-tagged binary formats for datasets and trained models. All
// numeric fields are raw little-endian; doubles round-trip bit-exactly.

namespace disprec {

namespace bio {

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw InputError("binary read: truncated input");
  return v;
}

inline void put_magic(std::ostream& out, const char magic[4], std::uint32_t version) {
  out.write(magic, 4);
  put(out, version);
}

inline std::uint32_t expect_magic(std::istream& in, const char magic[4]) {
  char buf[4];
  in.read(buf, 4);
  if (!in || std::memcmp(buf, magic, 4) != 0)
    throw InputError(std::string("binary read: bad magic, expected ") +
                     std::string(magic, 4));
  return get<std::uint32_t>(in);
}

}  // namespace bio

inline constexpr char kDatasetMagic[4] = {'D', 'R', 'D', 'S'};
inline constexpr char kKnnMagic[4] = {'D', 'R', 'K', 'N'};
inline constexpr char kSvdMagic[4] = {'D', 'R', 'S', 'V'};

inline void write_dataset_binary(const Dataset& ds, std::ostream& out) {
  bio::put_magic(out, kDatasetMagic, 1);
  bio::put<std::uint64_t>(out, ds.n_ratings());
  for (const Rating& r : ds.ratings()) {
    bio::put<std::int64_t>(out, r.user_id);
    bio::put<std::int64_t>(out, r.item_id);
    bio::put<double>(out, r.value);
    bio::put<std::uint8_t>(out, r.timestamp ? 1 : 0);
    bio::put<std::int64_t>(out, r.timestamp.value_or(0));
  }
}

inline Dataset read_dataset_binary(std::istream& in) {
  const std::uint32_t version = bio::expect_magic(in, kDatasetMagic);
  if (version != 1) throw InputError("dataset binary: unsupported version");
  const std::uint64_t n = bio::get<std::uint64_t>(in);
  std::vector<Rating> ratings;
  ratings.reserve(n);
  for (std::uint64_t k = 0; k < n; ++k) {
    Rating r;
    r.user_id = bio::get<std::int64_t>(in);
    r.item_id = bio::get<std::int64_t>(in);
    r.value = bio::get<double>(in);
    const bool has_ts = bio::get<std::uint8_t>(in) != 0;
    const std::int64_t ts = bio::get<std::int64_t>(in);
    if (has_ts) r.timestamp = ts;
    ratings.push_back(r);
  }
  return Dataset::from_ratings(std::move(ratings));
}

inline void save_knn_model(const KnnModel& model, std::ostream& out) {
  bio::put_magic(out, kKnnMagic, 1);
  const KnnParams& p = model.params();
  bio::put<std::uint8_t>(out, p.mode == KnnMode::UserBased ? 0 : 1);
  bio::put<std::int32_t>(out, p.min_k);
  bio::put<std::int32_t>(out, p.max_k);
  bio::put<std::int32_t>(out, p.min_support);
  bio::put<std::uint8_t>(out, p.clamp ? 1 : 0);
  write_dataset_binary(model.train(), out);
  std::uint64_t n_entries = 0;
  model.similarity().for_each_nonzero_upper(
      [&](int, int, double) { ++n_entries; });
  bio::put<std::int32_t>(out, model.similarity().size());
  bio::put<std::uint64_t>(out, n_entries);
  model.similarity().for_each_nonzero_upper([&](int i, int j, double v) {
    bio::put<std::int32_t>(out, i);
    bio::put<std::int32_t>(out, j);
    bio::put<double>(out, v);
  });
}

inline KnnModel load_knn_model(std::istream& in) {
  const std::uint32_t version = bio::expect_magic(in, kKnnMagic);
  if (version != 1) throw InputError("knn model: unsupported version");
  KnnParams p;
  p.mode = bio::get<std::uint8_t>(in) == 0 ? KnnMode::UserBased : KnnMode::ItemBased;
  p.min_k = bio::get<std::int32_t>(in);
  p.max_k = bio::get<std::int32_t>(in);
  p.min_support = bio::get<std::int32_t>(in);
  p.clamp = bio::get<std::uint8_t>(in) != 0;
  auto train = std::make_shared<Dataset>(read_dataset_binary(in));
  const int n = bio::get<std::int32_t>(in);
  const std::uint64_t n_entries = bio::get<std::uint64_t>(in);
  SimilarityMatrix sim(n);
  for (std::uint64_t k = 0; k < n_entries; ++k) {
    const int i = bio::get<std::int32_t>(in);
    const int j = bio::get<std::int32_t>(in);
    const double v = bio::get<double>(in);
    sim.set_upper(i, j, v);
  }
  return KnnModel(std::move(train), p, std::move(sim));
}

inline void save_svd_model(const SvdModel& model, std::ostream& out) {
  bio::put_magic(out, kSvdMagic, 1);
  const SvdParams& p = model.params();
  bio::put<std::int32_t>(out, p.n_factors);
  bio::put<std::int32_t>(out, p.n_epochs);
  bio::put<double>(out, p.learning_rate);
  bio::put<double>(out, p.regularization);
  bio::put<double>(out, p.init_std);
  bio::put<std::uint64_t>(out, p.seed);
  bio::put<std::uint8_t>(out, p.clamp ? 1 : 0);
  write_dataset_binary(model.train(), out);
  auto put_vec = [&](const std::vector<double>& v) {
    bio::put<std::uint64_t>(out, v.size());
    for (double x : v) bio::put<double>(out, x);
  };
  put_vec(model.user_bias());
  put_vec(model.item_bias());
  put_vec(model.user_factors());
  put_vec(model.item_factors());
}

inline SvdModel load_svd_model(std::istream& in) {
  const std::uint32_t version = bio::expect_magic(in, kSvdMagic);
  if (version != 1) throw InputError("svd model: unsupported version");
  SvdParams p;
  p.n_factors = bio::get<std::int32_t>(in);
  p.n_epochs = bio::get<std::int32_t>(in);
  p.learning_rate = bio::get<double>(in);
  p.regularization = bio::get<double>(in);
  p.init_std = bio::get<double>(in);
  p.seed = bio::get<std::uint64_t>(in);
  p.clamp = bio::get<std::uint8_t>(in) != 0;
  auto train = std::make_shared<Dataset>(read_dataset_binary(in));
  auto get_vec = [&]() {
    const std::uint64_t n = bio::get<std::uint64_t>(in);
    std::vector<double> v(n);
    for (auto& x : v) x = bio::get<double>(in);
    return v;
  };
  auto bu = get_vec();
  auto bi = get_vec();
  auto pu = get_vec();
  auto qi = get_vec();
  return SvdModel(std::move(train), p, std::move(bu), std::move(bi),
                  std::move(pu), std::move(qi));
}

}  // namespace disprec
