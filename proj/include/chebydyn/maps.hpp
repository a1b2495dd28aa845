#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <optional>
#include <regex>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"
#include "rational.hpp"

namespace chebydyn {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kDomainTolerance = 1e-12;

// a = -pi * p / q
struct ShiftFraction {
  std::int64_t p = 0;
  std::int64_t q = 1;
};

class MapSpec {
 public:
  MapSpec(int order, double shift) : order_(order), shift_(shift) {
    validate();
    if (shift_ == 0.0) fraction_ = ShiftFraction{0, 1};
  }

  static MapSpec exact(int order, std::int64_t p, std::int64_t q) {
    if (q < 1) throw DomainError("shift denominator must be >= 1");
    if (p < 0) throw DomainError("shift must satisfy 0 <= p/q <= 1/2");
    std::int64_t g = std::gcd(p, q);
    if (g > 1) {
      p /= g;
      q /= g;
    }
    if (p == 0) q = 1;
    MapSpec spec(order, -kPi * static_cast<double>(p) / static_cast<double>(q));
    spec.fraction_ = ShiftFraction{p, q};
    return spec;
  }

  // Accepts "0", "-pi/9", "-3pi/16", "-3*pi/16", "-pi" style tokens (exact) or decimal radians.
  static MapSpec parse(int order, std::string_view angle) {
    static const std::regex exact_form(R"(^\s*([+-]?)\s*(\d*)\s*\*?\s*pi\s*(?:/\s*(\d+))?\s*$)");
    std::string text(angle);
    std::smatch match;
    if (std::regex_match(text, match, exact_form)) {
      std::int64_t p = match[2].length() ? std::stoll(match[2].str()) : 1;
      std::int64_t q = match[3].length() ? std::stoll(match[3].str()) : 1;
      if (match[1].str() != "-" && p != 0) throw DomainError("shift angle must lie in [-pi/2, 0]");
      return exact(order, p, q);
    }
    std::size_t used = 0;
    double value = 0.0;
    try {
      value = std::stod(text, &used);
    } catch (const std::exception&) {
      throw DomainError("cannot parse shift angle: " + text);
    }
    if (text.find_first_not_of(" \t", used) != std::string::npos)
      throw DomainError("cannot parse shift angle: " + text);
    return MapSpec(order, value);
  }

  int order() const { return order_; }
  double shift() const { return shift_; }
  const std::optional<ShiftFraction>& shift_fraction() const { return fraction_; }
  bool is_exact() const { return fraction_.has_value(); }

  // beta = 1 + a/pi. Decimal shifts give the exact binary value, so a Markov
  // closure built from them will hit the explosion guard rather than lie.
  Rational beta() const {
    if (fraction_) return Rational(1) - make_rational(fraction_->p, fraction_->q);
    return exact_rational(1.0 + shift_ / kPi);
  }

  std::string angle_token() const {
    if (fraction_) {
      if (fraction_->p == 0) return "0";
      std::string token = "-";
      if (fraction_->p != 1) token += std::to_string(fraction_->p);
      token += "pi";
      if (fraction_->q != 1) token += "/" + std::to_string(fraction_->q);
      return token;
    }
    std::ostringstream out;
    out.precision(17);
    out << shift_;
    return out.str();
  }

 private:
  void validate() const {
    if (order_ < 2) throw DomainError("N must be ≥ 2");
    if (!(shift_ <= 1e-15 && shift_ >= -kPi / 2 - 1e-15))
      throw DomainError("shift angle must lie in [-pi/2, 0]");
  }

  int order_;
  double shift_;
  std::optional<ShiftFraction> fraction_;
};

inline double clamp_unit(double x, double tolerance, const char* what) {
  if (!(std::abs(x) <= 1.0 + tolerance)) throw DomainError(std::string(what) + " outside [-1, 1]");
  return std::clamp(x, -1.0, 1.0);
}

inline double eval_shifted_cheby(const MapSpec& spec, double x, double tolerance = kDomainTolerance) {
  x = clamp_unit(x, tolerance, "argument");
  return std::clamp(std::cos(spec.order() * std::acos(x) + spec.shift()), -1.0, 1.0);
}

inline double eval_cheby_poly(int n, double x) {
  if (n < 0) throw DomainError("polynomial order must be >= 0");
  if (n == 0) return 1.0;
  double previous = 1.0;
  double current = x;
  for (int k = 1; k < n; ++k) {
    double next = 2.0 * x * current - previous;
    previous = current;
    current = next;
  }
  return current;
}

// Second kind, U_{-1} = 0.
inline double eval_cheby_second_kind(int n, double x) {
  if (n < 0) return 0.0;
  double previous = 1.0;
  double current = 2.0 * x;
  if (n == 0) return previous;
  for (int k = 1; k < n; ++k) {
    double next = 2.0 * x * current - previous;
    previous = current;
    current = next;
  }
  return current;
}

inline double conjugacy_h(double x, double tolerance = kDomainTolerance) {
  x = clamp_unit(x, tolerance, "argument");
  return std::acos(-x) / kPi;
}

inline double conjugacy_h_inv(double y, double tolerance = kDomainTolerance) {
  if (!(y >= -tolerance && y <= 1.0 + tolerance)) throw DomainError("argument outside [0, 1]");
  return -std::cos(kPi * std::clamp(y, 0.0, 1.0));
}

// Polynomial form T_N(x) cos a - sin a sqrt(1-x^2) U_{N-1}(x); no acos/cos per call.
class ShiftedChebyshev {
 public:
  explicit ShiftedChebyshev(const MapSpec& spec)
      : order_(spec.order()),
        cos_a_(std::cos(spec.shift())),
        sin_a_(std::sin(spec.shift())),
        unshifted_(spec.shift() == 0.0) {}

  double operator()(double x) const {
    double t_prev = 1.0, t = x;
    double u_prev = 1.0, u = 2.0 * x;  // U_0, U_1
    for (int k = 1; k < order_; ++k) {
      double t_next = 2.0 * x * t - t_prev;
      t_prev = t;
      t = t_next;
      if (k + 1 < order_) {
        double u_next = 2.0 * x * u - u_prev;
        u_prev = u;
        u = u_next;
      }
    }
    if (unshifted_) return std::clamp(t, -1.0, 1.0);
    double s = std::sqrt(std::max(0.0, 1.0 - x * x));
    return std::clamp(t * cos_a_ - sin_a_ * s * u, -1.0, 1.0);  // u = U_{N-1}
  }

  // T'(x) = N sin(N theta + a) / sin(theta), x = cos(theta).
  double derivative(double x) const {
    double theta = std::acos(std::clamp(x, -1.0, 1.0));
    double s = std::sin(theta);
    if (s == 0.0) {
      if (unshifted_) return (x > 0 ? 1.0 : (order_ % 2 == 0 ? -1.0 : 1.0)) * order_ * order_;
      return std::copysign(INFINITY, std::sin(order_ * theta + std::atan2(sin_a_, cos_a_)));
    }
    return order_ * std::sin(order_ * theta + std::atan2(sin_a_, cos_a_)) / s;
  }

  int order() const { return order_; }

 private:
  int order_;
  double cos_a_;
  double sin_a_;
  bool unshifted_;
};

enum class Orientation { kCanonical, kMirrored };

// g(y) = slope * y + offset on [lower, upper).
struct Branch {
  Rational lower;
  Rational upper;
  int slope = 0;
  Rational offset;

  Rational apply(const Rational& y) const { return slope * y + offset; }
};

class PiecewiseLinearMap {
 public:
  PiecewiseLinearMap(int order, Rational beta, std::vector<Branch> branches,
                     Orientation orientation = Orientation::kCanonical)
      : order_(order), beta_(std::move(beta)), branches_(std::move(branches)), orientation_(orientation) {
    check_invariants();
    for (const Branch& b : branches_) {
      lower_.push_back(to_double(b.lower));
      offset_.push_back(to_double(b.offset));
    }
  }

  int order() const { return order_; }
  const Rational& beta() const { return beta_; }
  const std::vector<Branch>& branches() const { return branches_; }
  Orientation orientation() const { return orientation_; }

  std::size_t branch_index(const Rational& y) const {
    if (y < 0 || y > 1) throw DomainError("argument outside [0, 1]");
    auto it = std::upper_bound(branches_.begin(), branches_.end(), y,
                               [](const Rational& v, const Branch& b) { return v < b.lower; });
    return static_cast<std::size_t>(it - branches_.begin()) - 1;
  }

  std::size_t branch_index(double y) const {
    auto it = std::upper_bound(lower_.begin(), lower_.end(), y);
    if (it == lower_.begin()) return 0;
    return static_cast<std::size_t>(it - lower_.begin()) - 1;
  }

  Rational operator()(const Rational& y) const { return branches_[branch_index(y)].apply(y); }

  double operator()(double y) const {
    if (!(y >= -kDomainTolerance && y <= 1.0 + kDomainTolerance))
      throw DomainError("argument outside [0, 1]");
    y = std::clamp(y, 0.0, 1.0);
    std::size_t i = branch_index(y);
    return std::clamp(branches_[i].slope * y + offset_[i], 0.0, 1.0);
  }

  std::vector<Rational> breakpoints() const {
    std::vector<Rational> points;
    for (std::size_t i = 1; i < branches_.size(); ++i) points.push_back(branches_[i].lower);
    return points;
  }

  // R o g o R with R(y) = 1 - y.
  PiecewiseLinearMap mirrored() const {
    std::vector<Branch> flipped;
    for (auto it = branches_.rbegin(); it != branches_.rend(); ++it)
      flipped.push_back(Branch{1 - it->upper, 1 - it->lower, it->slope, 1 - it->slope - it->offset});
    Orientation other =
        orientation_ == Orientation::kCanonical ? Orientation::kMirrored : Orientation::kCanonical;
    return PiecewiseLinearMap(order_, beta_, std::move(flipped), other);
  }

 private:
  void check_invariants() const {
    if (branches_.empty()) throw StructureError("map has no branches");
    if (branches_.front().lower != 0 || branches_.back().upper != 1)
      throw StructureError("branches do not tile [0, 1]");
    for (std::size_t i = 0; i < branches_.size(); ++i) {
      const Branch& b = branches_[i];
      if (!(b.lower < b.upper)) throw StructureError("empty branch");
      if (std::abs(b.slope) != order_) throw StructureError("branch slope must be +-N");
      Rational lo = b.apply(b.lower), hi = b.apply(b.upper);
      if (lo < 0 || lo > 1 || hi < 0 || hi > 1) throw StructureError("branch image leaves [0, 1]");
      if (i > 0) {
        const Branch& prev = branches_[i - 1];
        if (prev.upper != b.lower) throw StructureError("branches do not tile [0, 1]");
        if (prev.slope != -b.slope) throw StructureError("branch slopes must alternate");
        if (prev.apply(b.lower) != b.apply(b.lower)) throw StructureError("map is discontinuous");
      }
    }
  }

  int order_;
  Rational beta_;
  std::vector<Branch> branches_;
  Orientation orientation_;
  std::vector<double> lower_;
  std::vector<double> offset_;
};

// g(y) = tri(N y - N - beta), tri(s) = distance from s to the nearest even integer.
// This is the conjugate through h(x) = arccos(-x)/pi. Even N with a = 0 starts
// with a falling branch (upside-down tent), odd N with a rising one.
inline PiecewiseLinearMap build_pwl(const MapSpec& spec, Orientation orientation = Orientation::kCanonical) {
  const int n = spec.order();
  const Rational beta = spec.beta();
  const Rational s_start = -n - beta;  // s at y = 0
  const Rational s_end = -beta;        // s at y = 1
  std::vector<Branch> branches;
  for (BigInt k = floor_of(s_start); Rational(k) < s_end; ++k) {
    Rational lo = std::max(Rational(k), s_start);
    Rational hi = std::min(Rational(k + 1), s_end);
    if (!(lo < hi)) continue;  // zero-width leading branch at a = 0
    Branch b;
    b.lower = (lo + n + beta) / n;
    b.upper = (hi + n + beta) / n;
    bool rising = (k % 2 == 0);
    b.slope = rising ? n : -n;
    b.offset = rising ? Rational(-n - beta - k) : Rational(k + 1 + n + beta);
    branches.push_back(std::move(b));
  }
  PiecewiseLinearMap map(n, beta, std::move(branches), Orientation::kCanonical);
  return orientation == Orientation::kCanonical ? map : map.mirrored();
}

// max |h(T(x)) - g(h(x))| over sample_count evenly spaced x in [-1, 1].
inline double verify_conjugation(const MapSpec& spec, int sample_count) {
  if (sample_count < 1) throw DomainError("sample_count must be >= 1");
  const PiecewiseLinearMap g = build_pwl(spec);
  double worst = 0.0;
  for (int i = 0; i < sample_count; ++i) {
    double x = sample_count == 1 ? 0.0 : -1.0 + 2.0 * i / (sample_count - 1);
    double lhs = conjugacy_h(eval_shifted_cheby(spec, x));
    double rhs = g(conjugacy_h(x));
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  return worst;
}

inline std::vector<double> orbit(const MapSpec& spec, double x0, int steps) {
  if (steps < 0) throw DomainError("steps must be >= 0");
  std::vector<double> path;
  path.reserve(static_cast<std::size_t>(steps) + 1);
  path.push_back(clamp_unit(x0, kDomainTolerance, "initial point"));
  for (int i = 0; i < steps; ++i) path.push_back(eval_shifted_cheby(spec, path.back()));
  return path;
}

// x_n = cos(N^n pi u0 + a (N^n - 1)/(N - 1)) for x_0 = cos(pi u0).
// Only equals the iterate for a = 0; for a != 0 the arccos fold breaks it from n = 2 on.
inline double closed_form_iterate(const MapSpec& spec, double u0, int n) {
  if (n < 0) throw DomainError("n must be >= 0");
  long double power = std::pow(static_cast<long double>(spec.order()), n);
  long double phase = power * static_cast<long double>(kPi) * u0 +
                      spec.shift() * (power - 1.0L) / (spec.order() - 1);
  return static_cast<double>(std::cos(phase));
}

}  // namespace chebydyn
