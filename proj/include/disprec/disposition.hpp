// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "disprec/ratings.hpp"

namespace disprec {

// Negative-percentage buckets with upper-inclusive boundaries, so the
// optimistic rule (fraction <= 0.30) coincides with B0_10 u B10_30.
enum class Bucket { B0_10, B10_30, B30_50, B50_70, B70_90, B90_100 };

enum class Optimism { Optimistic, Pessimistic };

inline const char* bucket_label(Bucket b) {
  switch (b) {
    case Bucket::B0_10: return "0-10%";
    case Bucket::B10_30: return "10-30%";
    case Bucket::B30_50: return "30-50%";
    case Bucket::B50_70: return "50-70%";
    case Bucket::B70_90: return "70-90%";
    case Bucket::B90_100: return "90-100%";
  }
  return "?";
}

inline const char* optimism_label(Optimism o) {
  return o == Optimism::Optimistic ? "optimistic" : "pessimistic";
}

struct DispositionProfile {
  std::int64_t user_id = 0;
  int n_ratings = 0;
  double negative_fraction = 0.0;
  Bucket bucket = Bucket::B0_10;
  Optimism optimism = Optimism::Optimistic;
  std::optional<double> positive_peak;           // 3.5 .. 5.0, or none
  std::optional<double> extreme_positive_ratio;  // none when no positives
};

// Fraction of ratings <= 3.0.
inline double negative_fraction(const std::vector<double>& values) {
  if (values.empty()) throw InputError("negative_fraction: empty rating list");
  std::size_t neg = 0;
  for (double v : values)
    if (v <= 3.0) ++neg;
  return static_cast<double>(neg) / static_cast<double>(values.size());
}

inline Bucket assign_bucket(double f) {
  if (f < 0.0 || f > 1.0) throw InputError("assign_bucket: fraction out of [0,1]");
  if (f <= 0.10) return Bucket::B0_10;
  if (f <= 0.30) return Bucket::B10_30;
  if (f <= 0.50) return Bucket::B30_50;
  if (f <= 0.70) return Bucket::B50_70;
  if (f <= 0.90) return Bucket::B70_90;
  return Bucket::B90_100;
}

inline Optimism classify_optimism(double f, double threshold = 0.30) {
  if (f < 0.0 || f > 1.0) throw InputError("classify_optimism: fraction out of [0,1]");
  return f <= threshold ? Optimism::Optimistic : Optimism::Pessimistic;
}

// Modal value among ratings >= 3.5; ties break toward the lower half-star.
inline std::optional<double> positive_peak(const std::vector<double>& values) {
  int counts[4] = {0, 0, 0, 0};  // 3.5, 4.0, 4.5, 5.0
  for (double v : values) {
    if (v >= 3.5) counts[static_cast<int>(std::round(v * 2.0)) - 7]++;
  }
  int best = -1;
  for (int i = 0; i < 4; ++i)
    if (counts[i] > 0 && (best < 0 || counts[i] > counts[best])) best = i;
  if (best < 0) return std::nullopt;
  return 3.5 + 0.5 * best;
}

// Share of {4.5, 5.0} among ratings >= 3.5; none when no positives exist.
inline std::optional<double> extreme_positive_ratio(
    const std::vector<double>& values) {
  std::size_t pos = 0, extreme = 0;
  for (double v : values) {
    if (v >= 3.5) {
      ++pos;
      if (v >= 4.5) ++extreme;
    }
  }
  if (pos == 0) return std::nullopt;
  return static_cast<double>(extreme) / static_cast<double>(pos);
}

inline std::vector<DispositionProfile> profile_users(const Dataset& ds,
                                                     double threshold = 0.30) {
  if (ds.empty()) throw InputError("profile_users: empty dataset");
  std::vector<DispositionProfile> out;
  out.reserve(ds.n_users());
  for (std::size_t u = 0; u < ds.n_users(); ++u) {
    std::vector<double> values = ds.user_rating_values(static_cast<int>(u));
    DispositionProfile p;
    p.user_id = ds.user_ids()[u];
    p.n_ratings = static_cast<int>(values.size());
    p.negative_fraction = negative_fraction(values);
    p.bucket = assign_bucket(p.negative_fraction);
    p.optimism = classify_optimism(p.negative_fraction, threshold);
    p.positive_peak = positive_peak(values);
    p.extreme_positive_ratio = extreme_positive_ratio(values);
    out.push_back(p);
  }
  return out;
}

struct PartitionScheme {
  enum class Variant { Binary, NegBucket, PositivePeak, Identity };
  Variant variant = Variant::Binary;
  double threshold = 0.30;  // Binary only
  // When set, pessimistic users without positive ratings get their own
  // group instead of being folded into the 3.5-peak group.
  bool separate_no_positive_group = false;
};

inline const char* scheme_label(PartitionScheme::Variant v) {
  switch (v) {
    case PartitionScheme::Variant::Binary: return "binary";
    case PartitionScheme::Variant::NegBucket: return "neg-bucket";
    case PartitionScheme::Variant::PositivePeak: return "pos-peak";
    case PartitionScheme::Variant::Identity: return "identity";
  }
  return "?";
}

struct Partition {
  PartitionScheme scheme;
  // Ordered groups; empty groups are retained so schemes stay exhaustive.
  std::vector<std::pair<std::string, std::vector<std::int64_t>>> groups;
};

inline Partition partition_users(const std::vector<DispositionProfile>& profiles,
                                 const PartitionScheme& scheme) {
  if (profiles.empty()) throw InputError("partition_users: no profiles");
  if (scheme.threshold <= 0.0 || scheme.threshold >= 1.0)
    throw InputError("partition_users: threshold out of (0,1)");
  Partition part;
  part.scheme = scheme;
  using V = PartitionScheme::Variant;
  switch (scheme.variant) {
    case V::Identity: {
      part.groups.emplace_back("all", std::vector<std::int64_t>{});
      for (const auto& p : profiles) part.groups[0].second.push_back(p.user_id);
      break;
    }
    case V::Binary: {
      part.groups.emplace_back("optimistic", std::vector<std::int64_t>{});
      part.groups.emplace_back("pessimistic", std::vector<std::int64_t>{});
      for (const auto& p : profiles) {
        int g = p.negative_fraction <= scheme.threshold ? 0 : 1;
        part.groups[g].second.push_back(p.user_id);
      }
      break;
    }
    case V::NegBucket: {
      for (int b = 0; b < 6; ++b)
        part.groups.emplace_back(bucket_label(static_cast<Bucket>(b)),
                                 std::vector<std::int64_t>{});
      for (const auto& p : profiles)
        part.groups[static_cast<int>(p.bucket)].second.push_back(p.user_id);
      break;
    }
    case V::PositivePeak: {
      part.groups.emplace_back("optimistic", std::vector<std::int64_t>{});
      part.groups.emplace_back("pessimistic-peak@3.5", std::vector<std::int64_t>{});
      part.groups.emplace_back("pessimistic-peak@4.0", std::vector<std::int64_t>{});
      part.groups.emplace_back("pessimistic-peak@4.5", std::vector<std::int64_t>{});
      part.groups.emplace_back("pessimistic-peak@5.0", std::vector<std::int64_t>{});
      if (scheme.separate_no_positive_group)
        part.groups.emplace_back("pessimistic-no-positive",
                                 std::vector<std::int64_t>{});
      for (const auto& p : profiles) {
        if (p.optimism == Optimism::Optimistic) {
          part.groups[0].second.push_back(p.user_id);
        } else if (!p.positive_peak) {
          int g = scheme.separate_no_positive_group ? 5 : 1;
          part.groups[g].second.push_back(p.user_id);
        } else {
          int g = 1 + static_cast<int>(std::round(*p.positive_peak * 2.0)) - 7;
          part.groups[g].second.push_back(p.user_id);
        }
      }
      break;
    }
  }
  return part;
}

}  // namespace disprec
