#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace surgcurate {

// Largest-remainder (Hamilton) apportionment of `quota` units by integer
// `weights`: floors first, then one extra unit each to the largest
// remainders, ties to the lower index. Zero total weight yields all zeros.
std::vector<std::uint64_t> apportion(std::uint64_t quota, std::span<const std::uint64_t> weights);

}  // namespace surgcurate
