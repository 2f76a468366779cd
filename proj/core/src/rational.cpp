#include "surgcurate/rational.hpp"

#include <charconv>
#include <cstdlib>

#include "surgcurate/error.hpp"

namespace surgcurate {
namespace {

std::int64_t pow10(int n) {
  std::int64_t p = 1;
  for (int i = 0; i < n; ++i) p *= 10;
  return p;
}

std::int64_t parse_int(std::string_view digits, std::string_view whole) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
  if (ec != std::errc{} || ptr != digits.data() + digits.size()) {
    throw Error(ErrorCode::kParse, "not a number: '" + std::string(whole) + "'");
  }
  return v;
}

}  // namespace

Rational parse_rational(std::string_view text) {
  std::string_view s = text;
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.empty()) throw Error(ErrorCode::kParse, "empty number");

  if (const auto slash = s.find('/'); slash != std::string_view::npos) {
    const Rational num = parse_rational(s.substr(0, slash));
    const Rational den = parse_rational(s.substr(slash + 1));
    if (den == 0) throw Error(ErrorCode::kParse, "zero denominator: '" + std::string(text) + "'");
    return num / den;
  }

  bool negative = false;
  if (s.front() == '+' || s.front() == '-') {
    negative = s.front() == '-';
    s.remove_prefix(1);
  }
  const auto dot = s.find('.');
  std::string_view int_part = s.substr(0, dot);
  std::string_view frac_part = dot == std::string_view::npos ? std::string_view{} : s.substr(dot + 1);
  if (int_part.empty() && frac_part.empty()) {
    throw Error(ErrorCode::kParse, "not a number: '" + std::string(text) + "'");
  }
  if (frac_part.size() > 15) {
    throw Error(ErrorCode::kParse, "too many decimals: '" + std::string(text) + "'");
  }
  const std::int64_t whole = int_part.empty() ? 0 : parse_int(int_part, text);
  const std::int64_t frac = frac_part.empty() ? 0 : parse_int(frac_part, text);
  const std::int64_t scale = pow10(static_cast<int>(frac_part.size()));
  Rational r(whole * scale + frac, scale);
  return negative ? -r : r;
}

std::int64_t round_half_away(const Rational& value) {
  const std::int64_t num = value.numerator();
  const std::int64_t den = value.denominator();  // always positive
  const std::int64_t mag = std::llabs(num);
  const std::int64_t q = mag / den;
  const std::int64_t rem = mag % den;
  const std::int64_t rounded = (2 * rem >= den) ? q + 1 : q;
  return num < 0 ? -rounded : rounded;
}

std::int64_t round_scaled(const Rational& value, int decimals) {
  return round_half_away(value * Rational(pow10(decimals)));
}

std::string format_fixed(const Rational& value, int decimals, bool explicit_sign) {
  const std::int64_t scaled = round_scaled(value, decimals);
  const std::int64_t mag = std::llabs(scaled);
  const std::int64_t p = pow10(decimals);
  std::string out;
  if (scaled < 0) {
    out.push_back('-');
  } else if (explicit_sign) {
    out.push_back('+');
  }
  out += std::to_string(mag / p);
  if (decimals > 0) {
    std::string frac = std::to_string(mag % p);
    out.push_back('.');
    out.append(static_cast<std::size_t>(decimals) - frac.size(), '0');
    out += frac;
  }
  return out;
}

double to_double(const Rational& value) {
  return boost::rational_cast<double>(value);
}

}  // namespace surgcurate
