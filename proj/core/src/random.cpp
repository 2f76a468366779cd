#include "surgcurate/random.hpp"

#include <limits>
#include <string>

#include "surgcurate/hashing.hpp"

namespace surgcurate {

std::uint64_t Rng::uniform_index(std::uint64_t bound) {
  constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
  const std::uint64_t limit = kMax - (kMax % bound + 1) % bound;
  std::uint64_t draw = engine_();
  while (draw > limit) draw = engine_();
  return draw % bound;
}

double Rng::uniform_unit() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::uint64_t derive_seed(std::uint64_t root, std::string_view stage) {
  std::string msg = "surgcurate:";
  msg.append(stage);
  msg.push_back(':');
  msg.append(std::to_string(root));
  const Digest d = sha256(msg);
  std::uint64_t out = 0;
  for (int i = 7; i >= 0; --i) out = (out << 8) | d[static_cast<std::size_t>(i)];
  return out;
}

}  // namespace surgcurate
