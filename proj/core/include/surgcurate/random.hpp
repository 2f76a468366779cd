#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace surgcurate {

// Seeded generator with platform-independent derived draws. The standard
// distributions are implementation-defined, so every draw that feeds an
// artifact goes through the helpers below instead.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform over [0, bound). bound must be nonzero.
  std::uint64_t uniform_index(std::uint64_t bound);

  // Uniform double in [0, 1) with 53 random bits.
  double uniform_unit();

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_index(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

// Stage seeds are derived from the root seed as the first eight bytes
// (little-endian) of SHA-256("surgcurate:<stage>:<root>").
std::uint64_t derive_seed(std::uint64_t root, std::string_view stage);

}  // namespace surgcurate
