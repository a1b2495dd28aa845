#pragma once

#include <cmath>

#include "errors.hpp"

namespace chebydyn {

// Plain bisection; f(lo) and f(hi) must differ in sign.
template <class F>
double bisect(double lo, double hi, F&& f, double tolerance) {
  double f_lo = f(lo);
  double f_hi = f(hi);
  if (f_lo == 0.0) return lo;
  if (f_hi == 0.0) return hi;
  if (f_lo * f_hi > 0.0) throw DomainError("bisection bracket has no sign change");
  while (hi - lo > tolerance) {
    double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    double f_mid = f(mid);
    if (f_mid == 0.0) return mid;
    if ((f_mid < 0.0) == (f_lo < 0.0)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

struct NoisySample {
  double value = 0.0;
  double std_error = 0.0;
};

struct Bracket {
  double lo = 0.0;
  double hi = 0.0;
  bool noise_limited = false;

  double midpoint() const { return 0.5 * (lo + hi); }
  double half_width() const { return 0.5 * (hi - lo); }
};

// Bisection on a stochastic objective. Stops when the bracket is narrower than
// width, or when a midpoint sample is within n_sigma standard errors of zero
// (its sign is then not trustworthy; the bracket is kept and flagged).
template <class Sample>
Bracket bisect_noisy(double lo, double hi, bool negative_at_lo, Sample&& sample, double width, double n_sigma) {
  Bracket b{lo, hi, false};
  while (b.hi - b.lo >= width) {
    double mid = b.midpoint();
    NoisySample s = sample(mid);
    if (std::abs(s.value) < n_sigma * s.std_error) {
      b.noise_limited = true;
      break;
    }
    if ((s.value < 0.0) == negative_at_lo) b.lo = mid; else b.hi = mid;
  }
  return b;
}

}  // namespace chebydyn
