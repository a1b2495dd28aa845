#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <set>
#include <vector>

#include "errors.hpp"
#include "maps.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "rational.hpp"

namespace chebydyn {

struct MarkovPartition {
  std::vector<Rational> points;

  std::size_t cell_count() const { return points.empty() ? 0 : points.size() - 1; }
  Rational width(std::size_t i) const { return points[i + 1] - points[i]; }

  // Cell containing y; cells are half-open, the last one closed.
  std::size_t cell_of(double y) const {
    std::size_t lo = 0, hi = cell_count();
    while (hi - lo > 1) {
      std::size_t mid = (lo + hi) / 2;
      if (to_double(points[mid]) <= y) lo = mid; else hi = mid;
    }
    return lo;
  }
};

inline constexpr std::size_t kPartitionCap = 1'000'000;

// Forward closure of {0, 1, breakpoints} under g.
inline MarkovPartition build_markov_partition(const PiecewiseLinearMap& g,
                                              std::size_t max_points = kPartitionCap) {
  std::set<Rational> seen{Rational(0), Rational(1)};
  for (const Rational& b : g.breakpoints()) seen.insert(b);
  std::vector<Rational> pending(seen.begin(), seen.end());
  while (!pending.empty()) {
    Rational y = std::move(pending.back());
    pending.pop_back();
    Rational image = g(y);
    if (seen.insert(image).second) {
      if (seen.size() > max_points) throw GuardError("partition explosion");
      pending.push_back(std::move(image));
    }
  }
  return MarkovPartition{std::vector<Rational>(seen.begin(), seen.end())};
}

struct TransitionMatrix {
  std::size_t size = 0;
  std::vector<std::uint8_t> entries;  // row-major

  int at(std::size_t i, std::size_t j) const { return entries[i * size + j]; }
};

inline TransitionMatrix build_transition_matrix(const MarkovPartition& partition, const PiecewiseLinearMap& g) {
  const auto& pts = partition.points;
  const std::size_t n = partition.cell_count();
  TransitionMatrix a{n, std::vector<std::uint8_t>(n * n, 0)};
  for (std::size_t i = 0; i < n; ++i) {
    // Evaluate on the branch that owns the cell interior, so the right endpoint
    // uses the same affine piece.
    const Branch& b = g.branches()[g.branch_index(Rational((pts[i] + pts[i + 1]) / 2))];
    if (pts[i] < b.lower || pts[i + 1] > b.upper) throw StructureError("not Markov");
    Rational lo = b.apply(pts[i]), hi = b.apply(pts[i + 1]);
    if (hi < lo) std::swap(lo, hi);
    auto first = std::lower_bound(pts.begin(), pts.end(), lo);
    auto last = std::lower_bound(pts.begin(), pts.end(), hi);
    if (first == pts.end() || *first != lo || last == pts.end() || *last != hi)
      throw StructureError("not Markov");
    for (auto j = first - pts.begin(); j < last - pts.begin(); ++j) a.entries[i * n + j] = 1;
  }
  return a;
}

// Null space of an integer matrix. Forward pass is fraction-free (Bareiss);
// back-substitution in rationals. One basis vector per free column.
inline std::vector<std::vector<Rational>> integer_kernel(std::vector<std::vector<BigInt>> m) {
  const std::size_t rows = m.size();
  const std::size_t cols = rows ? m[0].size() : 0;
  std::vector<std::size_t> pivot_cols;
  BigInt previous = 1;
  std::size_t r = 0;
  for (std::size_t c = 0; c < cols && r < rows; ++c) {
    std::size_t p = r;
    while (p < rows && m[p][c] == 0) ++p;
    if (p == rows) continue;
    std::swap(m[p], m[r]);
    for (std::size_t i = r + 1; i < rows; ++i) {
      for (std::size_t j = c + 1; j < cols; ++j)
        m[i][j] = (m[r][c] * m[i][j] - m[i][c] * m[r][j]) / previous;
      m[i][c] = 0;
    }
    previous = m[r][c];
    pivot_cols.push_back(c);
    ++r;
  }
  std::vector<bool> is_pivot(cols, false);
  for (std::size_t c : pivot_cols) is_pivot[c] = true;
  std::vector<std::vector<Rational>> basis;
  for (std::size_t free = 0; free < cols; ++free) {
    if (is_pivot[free]) continue;
    std::vector<Rational> v(cols, Rational(0));
    v[free] = 1;
    for (std::size_t k = pivot_cols.size(); k-- > 0;) {
      std::size_t c = pivot_cols[k];
      Rational sum = 0;
      for (std::size_t j = c + 1; j < cols; ++j)
        if (m[k][j] != 0 && v[j] != 0) sum += Rational(m[k][j]) * v[j];
      v[c] = -sum / Rational(m[k][c]);
    }
    basis.push_back(std::move(v));
  }
  return basis;
}

// Kernel of A^T - N I, i.e. fixed vectors of (1/N) A^T.
inline std::vector<std::vector<Rational>> transfer_kernel_basis(const TransitionMatrix& a, int order) {
  std::vector<std::vector<BigInt>> m(a.size, std::vector<BigInt>(a.size));
  for (std::size_t i = 0; i < a.size; ++i)
    for (std::size_t j = 0; j < a.size; ++j) m[i][j] = a.at(j, i) - (i == j ? order : 0);
  return integer_kernel(std::move(m));
}

enum class Normalization {
  kUnitIntegral,  // sum value_i * width_i = 1
  kUnitCellSum,   // sum value_i = 1, the convention of the published plateau table
};

struct Plateau {
  Rational lower;
  Rational upper;
  Rational value;
};

class StepDensity {
 public:
  StepDensity() = default;
  StepDensity(MarkovPartition partition, std::vector<Rational> values)
      : partition_(std::move(partition)), values_(std::move(values)) {
    if (values_.size() != partition_.cell_count()) throw StructureError("value count != cell count");
    cumulative_.push_back(0.0);
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (values_[i] < 0) throw StructureError("negative density value");
      values_d_.push_back(to_double(values_[i]));
      cumulative_.push_back(cumulative_.back() + to_double(values_[i] * partition_.width(i)));
    }
  }

  const MarkovPartition& partition() const { return partition_; }
  const std::vector<Rational>& values() const { return values_; }

  Rational integral() const {
    Rational total = 0;
    for (std::size_t i = 0; i < values_.size(); ++i) total += values_[i] * partition_.width(i);
    return total;
  }

  double operator()(double y) const { return values_d_[partition_.cell_of(y)]; }

  double cdf(double y) const {
    if (y <= 0.0) return 0.0;
    if (y >= 1.0) return cumulative_.back();
    std::size_t i = partition_.cell_of(y);
    return cumulative_[i] + values_d_[i] * (y - to_double(partition_.points[i]));
  }

  // Inverse of cdf for u in [0, total mass).
  double quantile(double u) const {
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    std::size_t i = std::min<std::size_t>(std::max<std::ptrdiff_t>(it - cumulative_.begin() - 1, 0),
                                          values_.size() - 1);
    while (values_d_[i] == 0.0 && i + 1 < values_.size()) ++i;
    double lo = to_double(partition_.points[i]);
    double hi = to_double(partition_.points[i + 1]);
    return std::clamp(lo + (u - cumulative_[i]) / values_d_[i], lo, hi);
  }

  // Adjacent cells with equal values merged.
  std::vector<Plateau> plateaus() const {
    std::vector<Plateau> out;
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!out.empty() && out.back().value == values_[i]) {
        out.back().upper = partition_.points[i + 1];
      } else {
        out.push_back(Plateau{partition_.points[i], partition_.points[i + 1], values_[i]});
      }
    }
    return out;
  }

  StepDensity renormalized(Normalization mode) const {
    Rational scale = 0;
    if (mode == Normalization::kUnitIntegral) {
      scale = integral();
    } else {
      for (const Rational& v : values_) scale += v;
    }
    std::vector<Rational> scaled;
    for (const Rational& v : values_) scaled.push_back(v / scale);
    return StepDensity(partition_, std::move(scaled));
  }

 private:
  MarkovPartition partition_;
  std::vector<Rational> values_;
  std::vector<double> values_d_;
  std::vector<double> cumulative_;
};

inline StepDensity normalized_density(const MarkovPartition& partition, std::vector<Rational> v,
                                      Normalization mode) {
  Rational sign = 0;
  for (const Rational& x : v)
    if (x != 0) {
      sign = x > 0 ? 1 : -1;
      break;
    }
  for (Rational& x : v) {
    x *= sign;
    if (x < 0) throw StructureError("kernel vector changes sign");
  }
  return StepDensity(partition, std::move(v)).renormalized(mode);
}

inline StepDensity invariant_step_density(const TransitionMatrix& a, const MarkovPartition& partition, int order,
                                          Normalization mode = Normalization::kUnitIntegral) {
  auto basis = transfer_kernel_basis(a, order);
  if (basis.empty()) throw StructureError("trivial kernel");
  if (basis.size() > 1) throw StructureError("degenerate kernel");
  return normalized_density(partition, std::move(basis.front()), mode);
}

// One ergodic component: the density supported on the invariant union of cells
// inside [lower, upper].
inline StepDensity invariant_step_density_on(const TransitionMatrix& a, const MarkovPartition& partition,
                                             int order, const Rational& lower, const Rational& upper,
                                             Normalization mode = Normalization::kUnitIntegral) {
  std::vector<std::size_t> cells;
  for (std::size_t i = 0; i < partition.cell_count(); ++i)
    if (partition.points[i] >= lower && partition.points[i + 1] <= upper) cells.push_back(i);
  if (cells.empty()) throw DomainError("sub-interval contains no cell");
  std::vector<bool> inside(partition.cell_count(), false);
  for (std::size_t i : cells) inside[i] = true;
  for (std::size_t i : cells)
    for (std::size_t j = 0; j < a.size; ++j)
      if (a.at(i, j) && !inside[j]) throw StructureError("sub-interval is not invariant");
  TransitionMatrix sub{cells.size(), std::vector<std::uint8_t>(cells.size() * cells.size())};
  for (std::size_t i = 0; i < cells.size(); ++i)
    for (std::size_t j = 0; j < cells.size(); ++j) sub.entries[i * cells.size() + j] = a.at(cells[i], cells[j]);
  auto basis = transfer_kernel_basis(sub, order);
  if (basis.size() != 1) throw StructureError("degenerate kernel");
  std::vector<Rational> full(partition.cell_count(), Rational(0));
  for (std::size_t i = 0; i < cells.size(); ++i) full[cells[i]] = basis.front()[i];
  return normalized_density(partition, std::move(full), mode);
}

inline bool star_condition(const MapSpec& spec) {
  return spec.order() % 2 == 0 || spec.shift() == 0.0;
}

// rho_T(x) = rho_g(h(x)) / (pi sqrt(1 - x^2)); +inf at x = +-1.
class PulledBackDensity {
 public:
  explicit PulledBackDensity(StepDensity rho_g) : rho_g_(std::move(rho_g)) {}

  double operator()(double x) const {
    if (std::abs(x) >= 1.0) return std::numeric_limits<double>::infinity();
    return rho_g_(conjugacy_h(x)) / (kPi * std::sqrt(1.0 - x * x));
  }

  double cdf(double x) const { return rho_g_.cdf(conjugacy_h(std::clamp(x, -1.0, 1.0))); }

  // Integral over [-1, 1] in the variable x = -cos(pi u), cell by cell.
  double integral() const {
    using boost::math::quadrature::gauss_kronrod;
    const auto& pts = rho_g_.partition().points;
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      auto integrand = [this](double u) {
        double x = conjugacy_h_inv(u);
        double jacobian = kPi * std::sin(kPi * u);
        return jacobian == 0.0 ? 0.0 : (*this)(x) * jacobian;
      };
      total += gauss_kronrod<double, 21>::integrate(integrand, to_double(pts[i]), to_double(pts[i + 1]), 10, 1e-13);
    }
    return total;
  }

  const StepDensity& step_density() const { return rho_g_; }

 private:
  StepDensity rho_g_;
};

inline PulledBackDensity density_pullback(StepDensity rho_g) { return PulledBackDensity(std::move(rho_g)); }

inline PulledBackDensity arcsine_density() {
  return PulledBackDensity(StepDensity(MarkovPartition{{Rational(0), Rational(1)}}, {Rational(1)}));
}

struct HistogramProtocol {
  std::int64_t trajectories = 10'000;
  std::int64_t steps = 10'000;
  std::int64_t burn_in = 1'000;
  int bins = 1'000;
  std::uint64_t seed = 0;
};

// Uniform bins on [lo, hi]; density integrates to 1.
struct Histogram {
  double lo = -1.0;
  double hi = 1.0;
  std::vector<std::uint64_t> counts;
  std::uint64_t total = 0;

  std::size_t bins() const { return counts.size(); }
  double bin_width() const { return (hi - lo) / static_cast<double>(counts.size()); }
  double bin_center(std::size_t i) const { return lo + (static_cast<double>(i) + 0.5) * bin_width(); }
  double density(std::size_t i) const {
    return static_cast<double>(counts[i]) / (static_cast<double>(total) * bin_width());
  }
};

// Sum over bins of |empirical mass - exact mass|, exact mass from a CDF.
template <class Cdf>
double l1_distance(const Histogram& h, Cdf&& cdf) {
  double distance = 0.0;
  for (std::size_t i = 0; i < h.bins(); ++i) {
    double a = h.lo + static_cast<double>(i) * h.bin_width();
    double b = i + 1 == h.bins() ? h.hi : a + h.bin_width();
    double exact = cdf(b) - cdf(a);
    distance += std::abs(static_cast<double>(h.counts[i]) / static_cast<double>(h.total) - exact);
  }
  return distance;
}

// Iterates x_n for n in [burn_in, steps) from x_0 ~ Uni(-1, 1). Trajectory t uses
// stream derive_seed(seed, {t}); counts are integers, so the result does not
// depend on the thread count.
inline Histogram histogram_estimate(const MapSpec& spec, const HistogramProtocol& protocol, int threads = 1) {
  if (protocol.trajectories < 1 || protocol.steps < 1 || protocol.bins < 1)
    throw DomainError("histogram counts must be positive");
  if (protocol.burn_in < 0 || protocol.burn_in >= protocol.steps)
    throw DomainError("burn_in must lie in [0, steps)");
  const ShiftedChebyshev map(spec);
  const std::size_t bins = static_cast<std::size_t>(protocol.bins);
  const std::size_t chunks = static_cast<std::size_t>(std::min<std::int64_t>(protocol.trajectories, 64));
  std::vector<std::vector<std::uint64_t>> partial(chunks, std::vector<std::uint64_t>(bins, 0));
  parallel_for(chunks, threads, [&](std::size_t chunk) {
    auto& counts = partial[chunk];
    for (std::int64_t t = static_cast<std::int64_t>(chunk); t < protocol.trajectories;
         t += static_cast<std::int64_t>(chunks)) {
      Rng rng(derive_seed(protocol.seed, {static_cast<std::uint64_t>(t)}));
      double x = rng.uniform(-1.0, 1.0);
      for (std::int64_t n = 0; n < protocol.steps; ++n) {
        if (n >= protocol.burn_in) {
          auto b = static_cast<std::size_t>((x + 1.0) * 0.5 * static_cast<double>(bins));
          ++counts[std::min(b, bins - 1)];
        }
        x = map(x);
      }
    }
  });
  Histogram h;
  h.counts.assign(bins, 0);
  for (const auto& counts : partial)
    for (std::size_t b = 0; b < bins; ++b) h.counts[b] += counts[b];
  for (auto c : h.counts) h.total += c;
  return h;
}

// Exact density for a spec with rational shift. Non-ergodic kernels raise "degenerate kernel".
inline StepDensity exact_step_density(const MapSpec& spec, Orientation orientation = Orientation::kCanonical,
                                      Normalization mode = Normalization::kUnitIntegral) {
  if (!spec.is_exact()) throw DomainError("exact density needs a rational shift (a = -pi p/q)");
  PiecewiseLinearMap g = build_pwl(spec, orientation);
  MarkovPartition partition = build_markov_partition(g);
  return invariant_step_density(build_transition_matrix(partition, g), partition, spec.order(), mode);
}

}  // namespace chebydyn
