#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "errors.hpp"
#include "maps.hpp"
#include "rational.hpp"

namespace chebydyn {

// Exact coefficients, ascending degree.
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(std::vector<Rational> coefficients) : coefficients_(std::move(coefficients)) {
    while (!coefficients_.empty() && coefficients_.back() == 0) coefficients_.pop_back();
    for (const Rational& c : coefficients_) approx_.push_back(to_long_double(c));
  }

  const std::vector<Rational>& coefficients() const { return coefficients_; }
  int degree() const { return static_cast<int>(coefficients_.size()) - 1; }  // -1 for zero

  Rational operator()(const Rational& x) const {
    Rational acc = 0;
    for (auto it = coefficients_.rbegin(); it != coefficients_.rend(); ++it) acc = acc * x + *it;
    return acc;
  }

  double operator()(double x) const {
    long double acc = 0.0L;
    for (auto it = approx_.rbegin(); it != approx_.rend(); ++it) acc = acc * x + *it;
    return static_cast<double>(acc);
  }

 private:
  std::vector<Rational> coefficients_;
  std::vector<long double> approx_;
};

inline std::vector<BigInt> binomial_row(int n) {
  std::vector<BigInt> row(static_cast<std::size_t>(n) + 1, BigInt(1));
  for (int k = 1; k < n; ++k) row[k] = row[k - 1] * (n - k + 1) / k;
  return row;
}

// B_0..B_n with B_1 = -1/2, from sum_{k<m} C(m,k) B_k = 0 (m >= 2).
inline std::vector<Rational> bernoulli_numbers(int n) {
  std::vector<Rational> b(static_cast<std::size_t>(n) + 1);
  b[0] = 1;
  for (int m = 2; m <= n + 1; ++m) {
    auto c = binomial_row(m);
    Rational sum = 0;
    for (int k = 0; k < m - 1; ++k) sum += Rational(c[k]) * b[k];
    b[m - 1] = -sum / m;
  }
  return b;
}

inline Polynomial bernoulli_poly(int n) {
  if (n < 0) throw DomainError("n must be >= 0");
  auto b = bernoulli_numbers(n);
  auto c = binomial_row(n);
  std::vector<Rational> coefficients(static_cast<std::size_t>(n) + 1);
  for (int k = 0; k <= n; ++k) coefficients[n - k] = Rational(c[k]) * b[k];
  return Polynomial(std::move(coefficients));
}

// e_k = E_k(0) from E_m(0) + E_m(1) = 2 delta_{m0}.
inline Polynomial euler_poly(int n) {
  if (n < 0) throw DomainError("n must be >= 0");
  std::vector<Rational> e(static_cast<std::size_t>(n) + 1);
  for (int m = 0; m <= n; ++m) {
    auto c = binomial_row(m);
    Rational sum = 0;
    for (int k = 0; k < m; ++k) sum += Rational(c[k]) * e[k];
    e[m] = (Rational(m == 0 ? 2 : 0) - sum) / 2;
  }
  auto c = binomial_row(n);
  std::vector<Rational> coefficients(static_cast<std::size_t>(n) + 1);
  for (int k = 0; k <= n; ++k) coefficients[n - k] = Rational(c[k]) * e[k];
  return Polynomial(std::move(coefficients));
}

enum class EigenBranch { kBernoulli, kEuler };

inline std::string to_string(EigenBranch b) { return b == EigenBranch::kBernoulli ? "bernoulli" : "euler"; }

namespace detail {

inline void check_multiplication_args(EigenBranch kind, int n, int m, int samples) {
  if (n < 0 || m < 1 || samples < 1) throw DomainError("need n >= 0, m >= 1, sample_count >= 1");
  if (kind == EigenBranch::kEuler && m % 2 == 0) throw DomainError("Euler multiplication theorem needs odd m");
}

}  // namespace detail

// max |lhs - rhs| of the multiplication theorem at x = i/(samples-1), exact.
inline Rational multiplication_theorem_residual_exact(EigenBranch kind, int n, int m, int samples) {
  detail::check_multiplication_args(kind, n, m, samples);
  Polynomial p = kind == EigenBranch::kBernoulli ? bernoulli_poly(n) : euler_poly(n);
  Rational factor = kind == EigenBranch::kBernoulli ? (n == 0 ? Rational(1, m) : Rational(ipow(m, n - 1)))
                                                     : Rational(ipow(m, n));
  Rational worst = 0;
  for (int i = 0; i < samples; ++i) {
    Rational x = samples == 1 ? Rational(0) : Rational(i, samples - 1);
    Rational sum = 0;
    for (int k = 0; k < m; ++k) {
      Rational term = p(x + Rational(k, m));
      sum += (kind == EigenBranch::kEuler && k % 2) ? -term : term;
    }
    Rational residual = abs(p(m * x) - factor * sum);
    worst = std::max(worst, residual);
  }
  return worst;
}

inline double multiplication_theorem_check(EigenBranch kind, int n, int m, int samples) {
  detail::check_multiplication_args(kind, n, m, samples);
  Polynomial p = kind == EigenBranch::kBernoulli ? bernoulli_poly(n) : euler_poly(n);
  double factor = kind == EigenBranch::kBernoulli ? std::pow(m, n - 1) : std::pow(m, n);
  double worst = 0.0;
  for (int i = 0; i < samples; ++i) {
    double x = samples == 1 ? 0.0 : static_cast<double>(i) / (samples - 1);
    double sum = 0.0;
    for (int k = 0; k < m; ++k) {
      double term = p(x + static_cast<double>(k) / m);
      sum += (kind == EigenBranch::kEuler && k % 2) ? -term : term;
    }
    worst = std::max(worst, std::abs(p(m * x) - factor * sum));
  }
  return worst;
}

// (1/N) sum of f over the branch preimages of y.
template <class F>
double pf_apply_pwl(const PiecewiseLinearMap& g, F&& f, double y) {
  if (!(y >= 0.0 && y <= 1.0)) throw DomainError("argument outside [0, 1]");
  const auto& branches = g.branches();
  double sum = 0.0;
  for (std::size_t i = 0; i < branches.size(); ++i) {
    const Branch& b = branches[i];
    double x = (y - to_double(b.offset)) / b.slope;
    double lo = to_double(b.lower), hi = to_double(b.upper);
    bool last = i + 1 == branches.size();
    if (x >= lo && (x < hi || (last && x <= hi))) sum += f(x);
  }
  return sum / g.order();
}

inline constexpr double kEndpointBand = 1e-9;

// Sum of f(x)/|T'(x)| over preimages x = cos(theta), theta = (+-arccos y - a + 2 pi k)/N in (0, pi).
template <class F>
double pf_apply_smooth(const MapSpec& spec, F&& f, double y) {
  if (!(std::abs(y) <= 1.0 - kEndpointBand)) throw DomainError("singularity: |y| within 1e-9 of 1");
  const int n = spec.order();
  const double alpha = std::acos(y);
  const double jac = n * std::sqrt(1.0 - y * y);
  double sum = 0.0;
  for (int sign : {1, -1}) {
    for (int k = -1; k <= n + 1; ++k) {
      double theta = (sign * alpha - spec.shift() + 2.0 * kPi * k) / n;
      if (!(theta > 0.0 && theta < kPi)) continue;
      sum += f(std::cos(theta)) * std::sin(theta) / jac;
    }
  }
  return sum;
}

// Inner argument t = scale * arccos(arccos_sign * x) / pi + shift.
struct EigenDescriptor {
  EigenBranch kind = EigenBranch::kBernoulli;
  int degree = 0;
  int arccos_sign = -1;
  Rational scale = 1;
  Rational shift = 0;
};

class EigenPair {
 public:
  EigenPair(int n, Rational lambda, EigenDescriptor descriptor)
      : n_(n),
        lambda_(std::move(lambda)),
        descriptor_(std::move(descriptor)),
        poly_(descriptor_.kind == EigenBranch::kBernoulli ? bernoulli_poly(descriptor_.degree)
                                                          : euler_poly(descriptor_.degree)),
        scale_(to_double(descriptor_.scale)),
        shift_(to_double(descriptor_.shift)) {}

  int n() const { return n_; }
  const Rational& lambda() const { return lambda_; }
  EigenBranch branch() const { return descriptor_.kind; }
  const EigenDescriptor& descriptor() const { return descriptor_; }
  const Polynomial& polynomial() const { return poly_; }

  double inner(double x) const {
    return scale_ * std::acos(std::clamp(descriptor_.arccos_sign * x, -1.0, 1.0)) / kPi + shift_;
  }

  double operator()(double x) const {
    if (std::abs(x) >= 1.0) return std::numeric_limits<double>::infinity();
    return poly_(inner(x)) / (kPi * std::sqrt(1.0 - x * x));
  }

 private:
  int n_;
  Rational lambda_;
  EigenDescriptor descriptor_;
  Polynomial poly_;
  double scale_;
  double shift_;
};

inline Rational inverse_power(std::int64_t base, int exponent) { return Rational(BigInt(1), ipow(base, exponent)); }

// Even N: B_2n(arccos(-x)/(2pi) + 1/2). Odd N: B_2n(arccos(-x)/pi) or E_{2n-1}(arccos(-x)/pi).
inline EigenPair eigenfunction_ordinary(int order, int n, EigenBranch branch = EigenBranch::kBernoulli) {
  if (order < 2) throw DomainError("N must be ≥ 2");
  if (n < 0) throw DomainError("n must be >= 0");
  EigenDescriptor d;
  d.kind = branch;
  d.arccos_sign = -1;
  if (branch == EigenBranch::kEuler) {
    if (order % 2 == 0) throw DomainError("Euler branch exists only for odd N");
    if (n < 1) throw DomainError("Euler branch needs n >= 1");
    d.degree = 2 * n - 1;
  } else {
    d.degree = 2 * n;
    if (order % 2 == 0) {
      d.scale = Rational(1, 2);
      d.shift = Rational(1, 2);
    }
  }
  return EigenPair(n, inverse_power(order, 2 * n), d);
}

// Candidate family for T_{2q, -pi/m}: B_2n((m/2pi) arccos x + 1/2), eigenvalue (2q)^(-2n).
inline EigenPair eigenfunction_shifted_even(int q, int m, int n) {
  if (q < 1 || m < 2 || n < 0) throw DomainError("need q >= 1, m >= 2, n >= 0");
  EigenDescriptor d;
  d.kind = EigenBranch::kBernoulli;
  d.degree = 2 * n;
  d.arccos_sign = 1;
  d.scale = Rational(m, 2);
  d.shift = Rational(1, 2);
  return EigenPair(n, inverse_power(2 * q, 2 * n), d);
}

inline double interior_grid_point(int i, int points) { return -1.0 + (2.0 * i + 1.0) / points; }

// sup |PF rho - lambda rho| / max(1, sup |rho|) over the midpoint grid.
template <class F>
double eigen_residual(const MapSpec& spec, F&& rho, double lambda, int points = 500) {
  double worst = 0.0, scale = 1.0;
  for (int i = 0; i < points; ++i) {
    double y = interior_grid_point(i, points);
    double value = rho(y);
    scale = std::max(scale, std::abs(value));
    worst = std::max(worst, std::abs(pf_apply_smooth(spec, rho, y) - lambda * value));
  }
  return worst / scale;
}

inline double eigen_residual(const MapSpec& spec, const EigenPair& pair, int points = 500) {
  return eigen_residual(spec, pair, to_double(pair.lambda()), points);
}

enum class SemiConjugacy { kEven, kOdd };

inline double cheby_cos(int n, double x) { return std::cos(n * std::acos(std::clamp(x, -1.0, 1.0))); }

// kEven, (q, m): -T_m o T_{2q,-pi/m} = T_{2q} o (-T_m) = T_{2qm}.
// kOdd,  (N, m): -T_2m o T_{N,-pi/m} = T_N o (-T_2m) = -T_{2mN}, N odd.
// Returns the larger of the two residuals.
inline double semi_conjugacy_check(SemiConjugacy variant, int first, int m, int samples) {
  if (m < 2 || first < 1 || samples < 1) throw DomainError("invalid semi-conjugacy parameters");
  if (variant == SemiConjugacy::kOdd && first % 2 == 0) throw DomainError("odd variant needs odd N");
  const int order = variant == SemiConjugacy::kEven ? 2 * first : first;
  const int outer = variant == SemiConjugacy::kEven ? m : 2 * m;
  const double sign = variant == SemiConjugacy::kEven ? 1.0 : -1.0;
  const MapSpec shifted = MapSpec::exact(order, 1, m);
  double worst = 0.0;
  for (int i = 0; i < samples; ++i) {
    double x = samples == 1 ? 0.0 : -1.0 + 2.0 * i / (samples - 1);
    double lhs = -cheby_cos(outer, eval_shifted_cheby(shifted, x));
    double mid = cheby_cos(order, -cheby_cos(outer, x));
    double rhs = sign * cheby_cos(order * outer, x);
    worst = std::max({worst, std::abs(lhs - mid), std::abs(lhs - rhs)});
  }
  return worst;
}

}  // namespace chebydyn
