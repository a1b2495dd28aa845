#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>

#include "errors.hpp"

namespace chebydyn {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

inline Rational make_rational(std::int64_t p, std::int64_t q) {
  if (q == 0) throw DomainError("zero denominator");
  return Rational(BigInt(p), BigInt(q));
}

// Always "p/q", also for integers, so JSON values share one shape.
inline std::string to_string(const Rational& r) {
  return numerator(r).str() + "/" + denominator(r).str();
}

inline Rational parse_rational(std::string_view text) {
  auto slash = text.find('/');
  try {
    if (slash == std::string_view::npos) return Rational(BigInt(std::string(text)));
    BigInt p(std::string(text.substr(0, slash)));
    BigInt q(std::string(text.substr(slash + 1)));
    if (q == 0) throw DomainError("zero denominator");
    return Rational(p, q);
  } catch (const std::runtime_error&) {
    throw DomainError("not a rational: " + std::string(text));
  }
}

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

inline long double to_long_double(const Rational& r) {
  return r.convert_to<long double>();
}

// Exact binary value of a double.
inline Rational exact_rational(double v) {
  int exponent = 0;
  double mantissa = std::frexp(v, &exponent);
  auto scaled = static_cast<std::int64_t>(std::ldexp(mantissa, 53));
  exponent -= 53;
  Rational r{BigInt(scaled)};
  if (exponent > 0) r *= Rational(BigInt(1) << exponent);
  if (exponent < 0) r /= Rational(BigInt(1) << -exponent);
  return r;
}

inline BigInt floor_of(const Rational& r) {
  BigInt q = numerator(r) / denominator(r);  // truncates toward zero
  if (numerator(r) < 0 && q * denominator(r) != numerator(r)) q -= 1;
  return q;
}

inline BigInt ipow(std::int64_t base, int exponent) {
  BigInt result = 1;
  for (int i = 0; i < exponent; ++i) result *= base;
  return result;
}

}  // namespace chebydyn
