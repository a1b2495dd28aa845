#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "density.hpp"
#include "errors.hpp"
#include "maps.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "rational.hpp"

namespace chebydyn {

struct SpinConfig {
  std::vector<int> sigma;  // entries +-1

  bool operator==(const SpinConfig&) const = default;
  auto operator<=>(const SpinConfig&) const = default;
};

enum class Enumeration { kMeetInTheMiddle, kExhaustive };

inline constexpr int kMaxSpinTuple = 30;
inline constexpr int kMaxExhaustiveTuple = 20;

namespace detail {

inline void check_tuple(const std::vector<int>& times) {
  if (times.empty()) throw DomainError("tuple must have at least one time");
  for (int n : times)
    if (n < 0) throw DomainError("times must be nonnegative");
}

// Largest |sum| of weights times max |coefficient|, as a bit count estimate.
inline bool fits_int64(int order, const std::vector<int>& times, std::int64_t max_coefficient) {
  long double bound = 0.0L;
  for (int n : times) bound += std::pow(static_cast<long double>(order), n) * max_coefficient;
  return bound < 0x1.0p61L;
}

template <class Int>
Int power_of(int order, int n) {
  Int v = 1;
  for (int i = 0; i < n; ++i) v *= order;
  return v;
}

struct BigIntHash {
  std::size_t operator()(const BigInt& v) const { return std::hash<std::string>()(v.str()); }
};

template <class Int>
using SumMap = std::conditional_t<std::is_same_v<Int, BigInt>, std::unordered_map<BigInt, std::vector<std::uint32_t>, BigIntHash>,
                                  std::unordered_map<Int, std::vector<std::uint32_t>>>;

template <class Int>
Int masked_sum(const std::vector<Int>& w, std::size_t begin, std::size_t end, std::uint32_t mask) {
  Int s = 0;
  for (std::size_t i = begin; i < end; ++i) {
    if (mask >> (i - begin) & 1U) s += w[i]; else s -= w[i];
  }
  return s;
}

template <class Int>
std::vector<SpinConfig> solve_spins(const std::vector<Int>& w, Enumeration method) {
  const std::size_t r = w.size();
  auto config = [r](std::uint64_t bits) {
    SpinConfig c;
    c.sigma.resize(r);
    for (std::size_t i = 0; i < r; ++i) c.sigma[i] = (bits >> i & 1U) ? 1 : -1;
    return c;
  };
  std::vector<SpinConfig> out;
  if (method == Enumeration::kExhaustive) {
    for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << r); ++bits) {
      Int s = 0;
      for (std::size_t i = 0; i < r; ++i) {
        if (bits >> i & 1U) s += w[i]; else s -= w[i];
      }
      if (s == 0) out.push_back(config(bits));
    }
  } else {
    const std::size_t half = r / 2;
    SumMap<Int> left;
    for (std::uint32_t m = 0; m < (1U << half); ++m) left[masked_sum(w, 0, half, m)].push_back(m);
    for (std::uint32_t m = 0; m < (1U << (r - half)); ++m) {
      auto it = left.find(-masked_sum(w, half, r, m));
      if (it == left.end()) continue;
      for (std::uint32_t lm : it->second) out.push_back(config(lm | (std::uint64_t{m} << half)));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace detail

// All sigma in {-1,+1}^r with sum sigma_l N^{n_l} = 0.
inline std::vector<SpinConfig> diophantine_solutions(int order, const std::vector<int>& times,
                                                     Enumeration method = Enumeration::kMeetInTheMiddle) {
  if (order < 2) throw DomainError("N must be ≥ 2");
  detail::check_tuple(times);
  if (static_cast<int>(times.size()) > kMaxSpinTuple) throw GuardError("tuple length exceeds 30");
  if (method == Enumeration::kExhaustive && static_cast<int>(times.size()) > kMaxExhaustiveTuple)
    throw GuardError("exhaustive enumeration limited to r <= 20");
  if (detail::fits_int64(order, times, 1)) {
    std::vector<std::int64_t> w;
    for (int n : times) w.push_back(detail::power_of<std::int64_t>(order, n));
    return detail::solve_spins(w, method);
  }
  std::vector<BigInt> w;
  for (int n : times) w.push_back(detail::power_of<BigInt>(order, n));
  return detail::solve_spins(w, method);
}

struct SpinSumResult {
  double value = 0.0;
  double imaginary_residue = 0.0;
  std::size_t solutions = 0;
};

// 2^{-r} sum over solving sigma of exp(i a sum sigma_l (N^{n_l} - 1)/(N - 1)).
inline SpinSumResult spin_sum_correlation(const MapSpec& spec, const std::vector<int>& times) {
  if (!star_condition(spec)) throw DomainError("spin sum requires the star condition (even N, or a = 0)");
  const int order = spec.order();
  auto solutions = diophantine_solutions(order, times);
  std::complex<double> sum = 0.0;
  for (const SpinConfig& c : solutions) {
    BigInt m = 0;
    for (std::size_t l = 0; l < times.size(); ++l)
      m += c.sigma[l] * ((detail::power_of<BigInt>(order, times[l]) - 1) / (order - 1));
    double angle = 0.0;
    if (auto f = spec.shift_fraction()) {
      // a M = -pi p M / q, reduced mod 2 pi exactly.
      BigInt period = 2 * BigInt(f->q);
      BigInt residue = (BigInt(f->p) * m) % period;
      if (residue < 0) residue += period;
      angle = -kPi * residue.convert_to<double>() / static_cast<double>(f->q);
    } else {
      angle = std::fmod(spec.shift() * m.convert_to<long double>(), 2.0L * kPi);
    }
    sum += std::polar(1.0, angle);
  }
  double scale = std::ldexp(1.0, -static_cast<int>(times.size()));
  return SpinSumResult{sum.real() * scale, std::abs(sum.imag()) * scale, solutions.size()};
}

// Coefficients a_k of f(u) = sum a_k exp(i pi k u); zero amplitudes are dropped.
class FourierSupport {
 public:
  explicit FourierSupport(std::map<int, std::complex<double>> coefficients, double tail_l2 = 0.0)
      : tail_l2_(tail_l2) {
    for (auto& [k, a] : coefficients) {
      if (a == 0.0) continue;
      auto mirror = coefficients.find(-k);
      if (mirror == coefficients.end() || std::abs(mirror->second - std::conj(a)) > 1e-14 * std::max(1.0, std::abs(a)))
        throw DomainError("support must satisfy a_{-k} = conj(a_k)");
      coefficients_.emplace(k, a);
    }
  }

  static FourierSupport chebyshev() { return FourierSupport({{-1, 0.5}, {1, 0.5}}); }

  // f(u) = frac(u) - 1/2, the mean-subtracted N-ary shift observable:
  // a_k = i/(pi k) for even k != 0, truncated to |k| <= max_k.
  static FourierSupport sawtooth(int max_k) {
    if (max_k < 2) throw DomainError("sawtooth truncation needs max_k >= 2");
    std::map<int, std::complex<double>> c;
    for (int k = 2; k <= max_k; k += 2) {
      c[k] = std::complex<double>(0.0, 1.0 / (kPi * k));
      c[-k] = std::conj(c[k]);
    }
    // sum_{even k > max_k} 2/(pi k)^2, squared l2 norm of the discarded tail.
    double tail = 0.0;
    for (int k = max_k + (max_k % 2 ? 1 : 2); k < 2'000'000; k += 2) tail += 2.0 / (kPi * kPi * k * k);
    return FourierSupport(std::move(c), std::sqrt(tail));
  }

  // count distinct positive indices from 1..max_k, amplitudes uniform in the unit square.
  static FourierSupport random(std::uint64_t seed, int max_k, int count) {
    if (count < 1 || count > max_k) throw DomainError("random support needs 1 <= count <= max_k");
    Rng rng(seed);
    std::vector<int> pool;
    for (int k = 1; k <= max_k; ++k) pool.push_back(k);
    std::map<int, std::complex<double>> c;
    for (int i = 0; i < count; ++i) {
      std::size_t j = i + static_cast<std::size_t>(rng.uniform() * (pool.size() - i));
      std::swap(pool[i], pool[j]);
      std::complex<double> a(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
      c[pool[i]] = a;
      c[-pool[i]] = std::conj(a);
    }
    return FourierSupport(std::move(c));
  }

  const std::map<int, std::complex<double>>& coefficients() const { return coefficients_; }
  std::size_t size() const { return coefficients_.size(); }
  double tail_l2() const { return tail_l2_; }

  double l2_norm() const {
    double s = 0.0;
    for (const auto& [k, a] : coefficients_) s += std::norm(a);
    return std::sqrt(s);
  }

  int max_index() const {
    int m = 0;
    for (const auto& [k, a] : coefficients_) m = std::max(m, std::abs(k));
    return m;
  }

 private:
  std::map<int, std::complex<double>> coefficients_;
  double tail_l2_ = 0.0;
};

inline constexpr int kMaxSupportTuple = 12;
inline constexpr std::size_t kMaxSupportSize = 41;
inline constexpr double kMaxHalfEnumeration = 2e7;

struct GeneralizedCorrelation {
  double value = 0.0;
  double imaginary_residue = 0.0;
  // Bound on the change from the discarded tail; only available for r = 2
  // (Cauchy-Schwarz on the matching k1 N^n1 = -k2 N^n2). NaN otherwise.
  double truncation_bound = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

inline void check_support_guard(const FourierSupport& support, std::size_t r) {
  if (r > static_cast<std::size_t>(kMaxSupportTuple)) throw GuardError("tuple length exceeds 12");
  if (support.size() > kMaxSupportSize) throw GuardError("support size exceeds 41");
  if (std::pow(static_cast<double>(support.size()), static_cast<double>((r + 1) / 2)) > kMaxHalfEnumeration)
    throw GuardError("enumeration size exceeds cap");
}

// Odometer over support^(end-begin): callback(sum of k_l N^{n_l}, product of a_k).
template <class Int, class Callback>
void enumerate_weighted(const std::vector<std::pair<int, std::complex<double>>>& entries,
                        const std::vector<Int>& weights, std::size_t begin, std::size_t end, Callback&& callback) {
  const std::size_t len = end - begin;
  std::vector<std::size_t> idx(len, 0);
  if (entries.empty()) return;
  for (;;) {
    Int s = 0;
    std::complex<double> prod = 1.0;
    for (std::size_t i = 0; i < len; ++i) {
      s += Int(entries[idx[i]].first) * weights[begin + i];
      prod *= entries[idx[i]].second;
    }
    callback(s, prod);
    std::size_t i = 0;
    while (i < len && ++idx[i] == entries.size()) idx[i++] = 0;
    if (i == len) return;
  }
}

template <class Int>
using AmplitudeMap = std::conditional_t<std::is_same_v<Int, BigInt>,
                                        std::unordered_map<BigInt, std::complex<double>, BigIntHash>,
                                        std::unordered_map<Int, std::complex<double>>>;

template <class Int>
std::complex<double> weighted_delta_sum(const FourierSupport& support, const std::vector<Int>& weights) {
  std::vector<std::pair<int, std::complex<double>>> entries(support.coefficients().begin(),
                                                           support.coefficients().end());
  const std::size_t half = weights.size() / 2;
  AmplitudeMap<Int> left;
  enumerate_weighted(entries, weights, 0, half, [&](const Int& s, std::complex<double> p) { left[s] += p; });
  std::complex<double> total = 0.0;
  enumerate_weighted(entries, weights, half, weights.size(), [&](const Int& s, std::complex<double> p) {
    auto it = left.find(-s);
    if (it != left.end()) total += it->second * p;
  });
  return total;
}

template <class Int>
bool has_weighted_solution(const FourierSupport& support, const std::vector<Int>& weights) {
  std::vector<std::pair<int, std::complex<double>>> entries(support.coefficients().begin(),
                                                           support.coefficients().end());
  const std::size_t half = weights.size() / 2;
  std::conditional_t<std::is_same_v<Int, BigInt>, std::unordered_set<BigInt, BigIntHash>, std::unordered_set<Int>> left;
  enumerate_weighted(entries, weights, 0, half, [&](const Int& s, std::complex<double>) { left.insert(s); });
  bool found = false;
  enumerate_weighted(entries, weights, half, weights.size(), [&](const Int& s, std::complex<double>) {
    if (!found && left.count(-s)) found = true;
  });
  return found;
}

template <class Visitor>
auto with_weights(const FourierSupport& support, int order, const std::vector<int>& times, Visitor&& visit) {
  if (fits_int64(order, times, std::max(1, support.max_index()))) {
    std::vector<std::int64_t> w;
    for (int n : times) w.push_back(power_of<std::int64_t>(order, n));
    return visit(w);
  }
  std::vector<BigInt> w;
  for (int n : times) w.push_back(power_of<BigInt>(order, n));
  return visit(w);
}

}  // namespace detail

// sum over support^r of a_k1 ... a_kr delta(sum k_j N^{n_j}, 0).
inline GeneralizedCorrelation generalized_correlation(const FourierSupport& support, int order,
                                                      const std::vector<int>& times) {
  if (order < 2) throw DomainError("N must be ≥ 2");
  detail::check_tuple(times);
  detail::check_support_guard(support, times.size());
  std::complex<double> total =
      detail::with_weights(support, order, times, [&](const auto& w) { return detail::weighted_delta_sum(support, w); });
  GeneralizedCorrelation out{total.real(), std::abs(total.imag())};
  if (times.size() == 2) out.truncation_bound = 2.0 * support.l2_norm() * support.tail_l2() + support.tail_l2() * support.tail_l2();
  return out;
}

// Tuples in {0..n_max}^r whose delta sum has at least one surviving term.
inline std::uint64_t count_nonzero_tuples(const FourierSupport& support, int order, int r, int n_max) {
  if (order < 2) throw DomainError("N must be ≥ 2");
  if (r < 1 || n_max < 0) throw DomainError("need r >= 1 and n_max >= 0");
  detail::check_support_guard(support, static_cast<std::size_t>(r));
  std::uint64_t count = 0;
  std::vector<int> times(static_cast<std::size_t>(r), 0);
  for (;;) {
    bool hit = detail::with_weights(support, order, times,
                                    [&](const auto& w) { return detail::has_weighted_solution(support, w); });
    if (hit) ++count;
    std::size_t i = 0;
    while (i < times.size() && ++times[i] > n_max) times[i++] = 0;
    if (i == times.size()) break;
  }
  return count;
}

// Published N-ary shift law 1/(6N) N^{-|k|}.
inline Rational twopoint_nary_shift(int order, int k) {
  if (order < 2) throw DomainError("N must be ≥ 2");
  return Rational(BigInt(1), 6 * BigInt(order) * ipow(order, std::abs(k)));
}

// <(u - 1/2)(frac(N^k u) - 1/2)> for u uniform: <b^2> sum_j N^{-2j} N^{-|k|} = (1/12) N^{-|k|},
// with <b^2> = (2/N) S_{N,2} the centered-digit variance.
inline Rational nary_shift_autocovariance(int order, int k) {
  if (order < 2) throw DomainError("N must be ≥ 2");
  return Rational(BigInt(1), 12 * ipow(order, std::abs(k)));
}

// S_{N,k} = ((N-1)/2)^k + ((N-3)/2)^k + ... down to 1/2 (even N) or 0 (odd N).
inline Rational power_sum_S(int order, int k) {
  if (order < 2 || k < 0) throw DomainError("need N >= 2 and k >= 0");
  Rational sum = 0;
  for (int twice = order - 1; twice >= 0; twice -= 2) {
    Rational v(twice, 2);
    Rational term = 1;
    for (int i = 0; i < k; ++i) term *= v;
    sum += term;
  }
  return sum;
}

// <b^k> for a centered N-ary digit b uniform on {-(N-1)/2, ..., (N-1)/2}.
inline Rational digit_moment(int order, int k) {
  if (order < 2 || k < 0) throw DomainError("need N >= 2 and k >= 0");
  Rational sum = 0;
  for (int d = 0; d < order; ++d) {
    Rational v = Rational(d) - Rational(order - 1, 2);
    Rational term = 1;
    for (int i = 0; i < k; ++i) term *= v;
    sum += term;
  }
  return sum / order;
}

// (1/2)[(sin(2a/(N-1) - N^k pi) + sin(2a/(N-1)))/(N^k + 1) - sin(N^k pi)/(N^k - 1)] with
// sin(N^k pi) = 0 and sin(t - N^k pi) = (-1)^{N^k} sin t taken exactly.
inline double twopoint_shifted_closed_form(const MapSpec& spec, int k) {
  if (!star_condition(spec)) throw DomainError("closed form requires the star condition (even N, or a = 0)");
  if (k < 1) throw DomainError("closed form needs k >= 1; k = 0 is the second moment of the density");
  const int order = spec.order();
  const double t = 2.0 * spec.shift() / (order - 1);
  const double power = std::pow(static_cast<double>(order), k);
  const double parity = order % 2 == 0 ? 1.0 : -1.0;  // (-1)^{N^k}
  return 0.5 * (parity * std::sin(t) + std::sin(t)) / (power + 1.0);
}

struct McEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
};

struct MonteCarloOptions {
  bool stratified = true;  // u_i = (i + U_i)/n; the iid standard error is then conservative
  int threads = 1;
};

inline constexpr std::int64_t kMonteCarloBlock = 1 << 16;

// Samples x_0 from the invariant density by inverse CDF (arcsine under the star
// condition, the exact step density otherwise) and averages each tuple product.
// Blocks of 2^16 samples carry their own RNG stream and partial sums, reduced in
// block order, so results do not depend on the thread count.
inline std::vector<McEstimate> correlation_monte_carlo_batch(const MapSpec& spec,
                                                             const std::vector<std::vector<int>>& tuples,
                                                             std::int64_t n_samples, std::uint64_t seed,
                                                             const MonteCarloOptions& options = {}) {
  if (n_samples < 1) throw DomainError("n_samples must be >= 1");
  int horizon = 0;
  for (const auto& t : tuples) {
    detail::check_tuple(t);
    horizon = std::max(horizon, *std::max_element(t.begin(), t.end()));
  }
  std::optional<StepDensity> rho_g;
  if (!star_condition(spec)) rho_g = exact_step_density(spec);
  const std::int64_t blocks = (n_samples + kMonteCarloBlock - 1) / kMonteCarloBlock;
  const std::size_t m = tuples.size();
  std::vector<double> sums(static_cast<std::size_t>(blocks) * m, 0.0), squares(sums.size(), 0.0);
  parallel_for(static_cast<std::size_t>(blocks), options.threads, [&](std::size_t b) {
    Rng rng(derive_seed(seed, {b}));
    std::vector<double> x(static_cast<std::size_t>(horizon) + 1);
    const std::int64_t begin = static_cast<std::int64_t>(b) * kMonteCarloBlock;
    const std::int64_t end = std::min(n_samples, begin + kMonteCarloBlock);
    for (std::int64_t i = begin; i < end; ++i) {
      double u = options.stratified ? (static_cast<double>(i) + rng.uniform()) / static_cast<double>(n_samples)
                                    : rng.uniform();
      x[0] = conjugacy_h_inv(rho_g ? rho_g->quantile(u) : u);
      for (int n = 1; n <= horizon; ++n) x[n] = eval_shifted_cheby(spec, x[n - 1]);
      for (std::size_t j = 0; j < m; ++j) {
        double p = 1.0;
        for (int n : tuples[j]) p *= x[n];
        sums[b * m + j] += p;
        squares[b * m + j] += p * p;
      }
    }
  });
  std::vector<McEstimate> out(m);
  const double n = static_cast<double>(n_samples);
  for (std::size_t j = 0; j < m; ++j) {
    double s = 0.0, s2 = 0.0;
    for (std::int64_t b = 0; b < blocks; ++b) {
      s += sums[b * m + j];
      s2 += squares[b * m + j];
    }
    double mean = s / n;
    double variance = n > 1 ? std::max(0.0, (s2 - n * mean * mean) / (n - 1)) : 0.0;
    out[j] = McEstimate{mean, std::sqrt(variance / n)};
  }
  return out;
}

inline McEstimate correlation_monte_carlo(const MapSpec& spec, const std::vector<int>& times, std::int64_t n_samples,
                                          std::uint64_t seed, const MonteCarloOptions& options = {}) {
  return correlation_monte_carlo_batch(spec, {times}, n_samples, seed, options).front();
}

}  // namespace chebydyn
