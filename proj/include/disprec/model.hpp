// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <cstdint>

namespace disprec {

// How much of the full prediction rule could be applied. Cold start is a
// fallback, never an error.
enum class FallbackLevel { Full, AxisMeanOnly, GlobalMean };

struct Prediction {
  double estimate = 0.0;  // clamped to [0.5, 5.0] unless clamping disabled
  FallbackLevel fallback_level = FallbackLevel::Full;
};

class Recommender {
 public:
  virtual ~Recommender() = default;
  virtual Prediction predict(std::int64_t user_id, std::int64_t item_id) const = 0;
};

inline double clamp_rating(double v) {
  if (v < 0.5) return 0.5;
  if (v > 5.0) return 5.0;
  return v;
}

}  // namespace disprec
