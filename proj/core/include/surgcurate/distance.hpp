#pragma once

#include <cstddef>
#include <limits>

namespace surgcurate {

// Squared Euclidean distance of two f32 rows with f64 accumulation. The eight
// lanes and their final combine order are fixed, so results do not depend on
// the caller or on threading.
inline double squared_distance(const float* a, const float* b, std::size_t dim) {
  double acc[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  std::size_t d = 0;
  for (; d + 8 <= dim; d += 8) {
    for (std::size_t j = 0; j < 8; ++j) {
      const double diff = static_cast<double>(a[d + j]) - static_cast<double>(b[d + j]);
      acc[j] += diff * diff;
    }
  }
  for (std::size_t j = 0; d < dim; ++d, ++j) {
    const double diff = static_cast<double>(a[d]) - static_cast<double>(b[d]);
    acc[j] += diff * diff;
  }
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
}

// Same value as squared_distance whenever the result is < bound; otherwise
// returns some value >= bound. Lanes only grow, so a partial combine that
// already reaches the bound proves the full distance does too.
inline double squared_distance_bounded(const float* a, const float* b, std::size_t dim,
                                       double bound) {
  constexpr std::size_t kBlock = 128;
  double acc[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  auto combine = [&acc] {
    return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
  };
  std::size_t d = 0;
  while (d + 8 <= dim) {
    const std::size_t stop = (dim - d) / 8 * 8 < kBlock ? d + (dim - d) / 8 * 8 : d + kBlock;
    for (; d < stop; d += 8) {
      for (std::size_t j = 0; j < 8; ++j) {
        const double diff = static_cast<double>(a[d + j]) - static_cast<double>(b[d + j]);
        acc[j] += diff * diff;
      }
    }
    if (d < dim) {
      const double partial = combine();
      if (partial >= bound) return partial;
    }
  }
  for (std::size_t j = 0; d < dim; ++d, ++j) {
    const double diff = static_cast<double>(a[d]) - static_cast<double>(b[d]);
    acc[j] += diff * diff;
  }
  return combine();
}

}  // namespace surgcurate
