#pragma once

#include <boost/rational.hpp>

#include <cstdint>
#include <string>
#include <string_view>

// Boost 1.74's mixed rational/integer operator== recurses forever under
// C++20 rewritten comparisons; these exact matches win overload resolution.
namespace boost {
#define SURGCURATE_RATIONAL_INT_CMP(op, T)                                               \
  inline bool operator op(const rational<std::int64_t>& a, T b) {                        \
    return a op rational<std::int64_t>(b);                                                \
  }                                                                                       \
  inline bool operator op(T a, const rational<std::int64_t>& b) {                        \
    return rational<std::int64_t>(a) op b;                                                \
  }
#define SURGCURATE_RATIONAL_INT_CMPS(T)                                                   \
  SURGCURATE_RATIONAL_INT_CMP(==, T)                                                      \
  SURGCURATE_RATIONAL_INT_CMP(!=, T)                                                      \
  SURGCURATE_RATIONAL_INT_CMP(<, T)                                                       \
  SURGCURATE_RATIONAL_INT_CMP(>, T)                                                       \
  SURGCURATE_RATIONAL_INT_CMP(<=, T)                                                      \
  SURGCURATE_RATIONAL_INT_CMP(>=, T)
SURGCURATE_RATIONAL_INT_CMPS(int)
SURGCURATE_RATIONAL_INT_CMPS(long)
SURGCURATE_RATIONAL_INT_CMPS(long long)
#undef SURGCURATE_RATIONAL_INT_CMPS
#undef SURGCURATE_RATIONAL_INT_CMP
}  // namespace boost

namespace surgcurate {

// Exact arithmetic for ratios, policies and table scores.
using Rational = boost::rational<std::int64_t>;

// Parses "12", "-3.92", "+8.70", "0.405", "7/20".
Rational parse_rational(std::string_view text);

// Round half away from zero to `decimals` places, returned as the scaled
// integer (e.g. 43.555 at 2 decimals -> 4356).
std::int64_t round_scaled(const Rational& value, int decimals);

// Integer rounding, half away from zero.
std::int64_t round_half_away(const Rational& value);

// Fixed-point rendering after rounding half away from zero. With
// `explicit_sign`, nonnegative values get a leading '+'.
std::string format_fixed(const Rational& value, int decimals, bool explicit_sign = false);

double to_double(const Rational& value);

}  // namespace surgcurate
