#include "surgcurate/apportion.hpp"

#include <algorithm>
#include <numeric>

namespace surgcurate {

std::vector<std::uint64_t> apportion(std::uint64_t quota, std::span<const std::uint64_t> weights) {
  const std::size_t m = weights.size();
  std::vector<std::uint64_t> out(m, 0);
  const std::uint64_t total = std::accumulate(weights.begin(), weights.end(), std::uint64_t{0});
  if (m == 0 || total == 0 || quota == 0) return out;

  std::vector<std::uint64_t> remainder(m);
  std::uint64_t assigned = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const unsigned __int128 scaled = static_cast<unsigned __int128>(quota) * weights[i];
    out[i] = static_cast<std::uint64_t>(scaled / total);
    remainder[i] = static_cast<std::uint64_t>(scaled % total);
    assigned += out[i];
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t i = 0; assigned < quota; ++i, ++assigned) ++out[order[i]];
  return out;
}

}  // namespace surgcurate
