#pragma once

#include <algorithm>
#include <cassert>
#include <cctype>
#include <limits>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bisection.hpp"
#include "errors.hpp"
#include "maps.hpp"
#include "parallel.hpp"
#include "random.hpp"

namespace chebydyn {

enum class Coupling { kA, kAMinus, kB, kBMinus };

inline std::string to_string(Coupling c) {
  switch (c) {
    case Coupling::kA: return "A";
    case Coupling::kAMinus: return "A-";
    case Coupling::kB: return "B";
    case Coupling::kBMinus: return "B-";
  }
  return "?";
}

// Lattice type tag such as "2A" or "3B-": local order N followed by the coupling.
struct LatticeType {
  int order = 2;
  Coupling coupling = Coupling::kA;
};

inline Coupling parse_coupling(const std::string& text) {
  if (text == "A") return Coupling::kA;
  if (text == "A-" || text == "A_minus") return Coupling::kAMinus;
  if (text == "B") return Coupling::kB;
  if (text == "B-" || text == "B_minus") return Coupling::kBMinus;
  throw DomainError("unknown coupling type: " + text);
}

inline LatticeType parse_lattice_type(const std::string& text) {
  std::size_t i = 0;
  while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
  if (i == 0) throw DomainError("lattice type needs a leading order, e.g. 2A: " + text);
  return LatticeType{std::stoi(text.substr(0, i)), parse_coupling(text.substr(i))};
}

inline std::string to_string(const LatticeType& t) { return std::to_string(t.order) + to_string(t.coupling); }

inline void check_coupling_strength(double c) {
  if (!(c >= 0.0 && c <= 1.0)) throw DomainError("coupling strength must lie in [0, 1]");
}

// One synchronous update on a ring. mapped receives T(state).
template <class Map>
void cml_step(const std::vector<double>& state, std::vector<double>& next, std::vector<double>& mapped,
              Coupling coupling, double c, const Map& map) {
  const std::size_t j = state.size();
  next.resize(j);
  mapped.resize(j);
  for (std::size_t i = 0; i < j; ++i) mapped[i] = map(state[i]);
  const bool forward = coupling == Coupling::kA || coupling == Coupling::kAMinus;
  const double sign = (coupling == Coupling::kA || coupling == Coupling::kB) ? 1.0 : -1.0;
  const std::vector<double>& neighbour = forward ? mapped : state;
  const double keep = 1.0 - c;
  const double mix = sign * 0.5 * c;
  for (std::size_t i = 0; i < j; ++i) {
    std::size_t left = i == 0 ? j - 1 : i - 1;
    std::size_t right = i + 1 == j ? 0 : i + 1;
    double v = keep * mapped[i] + mix * (neighbour[left] + neighbour[right]);
    assert(std::abs(v) <= 1.0 + 1e-12);
    next[i] = std::clamp(v, -1.0, 1.0);  // rounding can push a convex combination past 1
  }
}

inline std::vector<double> cml_step(const std::vector<double>& state, Coupling coupling, double c,
                                    const MapSpec& spec) {
  check_coupling_strength(c);
  for (double x : state)
    if (!(std::abs(x) <= 1.0 + kDomainTolerance)) throw DomainError("lattice state outside [-1, 1]");
  std::vector<double> next, mapped;
  cml_step(state, next, mapped, coupling, c, [&](double x) { return eval_shifted_cheby(spec, x); });
  return next;
}

struct LatticeRun {
  MapSpec spec{2, 0.0};
  Coupling coupling = Coupling::kA;
  double c = 0.0;
  int sites = 5000;      // J
  int steps = 1000;      // K, measured steps
  int burn_in = 100;
  std::uint64_t seed = 0;

  void validate() const {
    check_coupling_strength(c);
    if (sites < 1) throw DomainError("J must be >= 1");
    if (steps < 1) throw DomainError("K must be >= 1");
    if (burn_in < 0) throw DomainError("burn_in must be >= 0");
  }
};

// Ring lattice with x_0^(i) ~ Uni(-1, 1) drawn from Rng(seed).
class Lattice {
 public:
  explicit Lattice(const LatticeRun& run) : run_(run), map_(run.spec) {
    run_.validate();
    Rng rng(run_.seed);
    state_.resize(static_cast<std::size_t>(run_.sites));
    for (double& x : state_) x = rng.uniform(-1.0, 1.0);
  }

  void advance() {
    cml_step(state_, next_, mapped_, run_.coupling, run_.c, map_);
    state_.swap(next_);
  }

  void advance(int n) {
    for (int i = 0; i < n; ++i) advance();
  }

  const std::vector<double>& state() const { return state_; }

 private:
  LatticeRun run_;
  ShiftedChebyshev map_;
  std::vector<double> state_, next_, mapped_;
};

struct NearestNeighbourCorrelation {
  double snnc = 0.0;
  double tnnc = 0.0;
  double snnc_stderr = 0.0;
  double tnnc_stderr = 0.0;
};

inline constexpr int kStderrBlocks = 50;

// SNNC = (1/KJ) sum x_n^(j) x_n^(j+1), TNNC = (1/KJ) sum x_n^(j) x_{n+1}^(j) over the
// K measured steps after burn-in. Standard errors from contiguous site blocks.
inline NearestNeighbourCorrelation measure_snnc_tnnc(const LatticeRun& run) {
  Lattice lattice(run);
  lattice.advance(run.burn_in);
  const std::size_t j = static_cast<std::size_t>(run.sites);
  std::vector<double> spatial(j, 0.0), temporal(j, 0.0);
  std::vector<double> previous = lattice.state();
  for (int n = 0; n < run.steps; ++n) {
    const auto& x = lattice.state();
    for (std::size_t i = 0; i < j; ++i) spatial[i] += x[i] * x[i + 1 == j ? 0 : i + 1];
    lattice.advance();
    const auto& y = lattice.state();
    for (std::size_t i = 0; i < j; ++i) temporal[i] += previous[i] * y[i];
    previous = y;
  }
  const std::size_t blocks = std::min<std::size_t>(j, kStderrBlocks);
  auto summarize = [&](const std::vector<double>& per_site, double& mean, double& error) {
    std::vector<double> block_means(blocks, 0.0);
    std::vector<std::size_t> block_sizes(blocks, 0);
    double total = 0.0;
    for (std::size_t i = 0; i < j; ++i) {
      std::size_t b = i * blocks / j;
      block_means[b] += per_site[i];
      ++block_sizes[b];
      total += per_site[i];
    }
    const double norm = static_cast<double>(run.steps);
    mean = total / (norm * static_cast<double>(j));
    if (blocks < 2) {
      error = std::numeric_limits<double>::quiet_NaN();
      return;
    }
    double ss = 0.0;
    for (std::size_t b = 0; b < blocks; ++b) {
      double m = block_means[b] / (norm * static_cast<double>(block_sizes[b]));
      ss += (m - mean) * (m - mean);
    }
    error = std::sqrt(ss / static_cast<double>(blocks - 1) / static_cast<double>(blocks));
  };
  NearestNeighbourCorrelation out;
  summarize(spatial, out.snnc, out.snnc_stderr);
  summarize(temporal, out.tnnc, out.tnnc_stderr);
  return out;
}

// K x J field after burn-in, row-major (time x space).
struct SpaceTimeField {
  int rows = 0;  // K
  int cols = 0;  // J
  std::vector<double> values;

  double at(int n, int i) const { return values[static_cast<std::size_t>(n) * cols + i]; }
};

inline SpaceTimeField pattern_dump(const LatticeRun& run) {
  Lattice lattice(run);
  lattice.advance(run.burn_in);
  SpaceTimeField field{run.steps, run.sites, {}};
  field.values.reserve(static_cast<std::size_t>(run.steps) * run.sites);
  for (int n = 0; n < run.steps; ++n) {
    if (n > 0) lattice.advance();
    field.values.insert(field.values.end(), lattice.state().begin(), lattice.state().end());
  }
  return field;
}

struct TwoSiteProtocol {
  std::int64_t trajectories = 10'000;
  std::int64_t steps = 10'100;
  std::int64_t burn_in = 100;
  int bins = 200;
  double diagonal_width = 0.05;
  std::uint64_t seed = 0;
};

// Joint histogram of (x^(1), x^(2)) on [-1, 1]^2, bins x bins, row index from x^(1).
struct TwoSiteHistogram {
  int bins = 0;
  std::vector<std::uint64_t> counts;
  std::uint64_t total = 0;
  std::uint64_t near_diagonal = 0;  // samples with |x1 - x2| < diagonal_width
  double diagonal_width = 0.0;

  double bin_width() const { return 2.0 / bins; }
  double density(int i, int k) const {
    return static_cast<double>(counts[static_cast<std::size_t>(i) * bins + k]) /
           (static_cast<double>(total) * bin_width() * bin_width());
  }
  double diagonal_fraction() const { return static_cast<double>(near_diagonal) / static_cast<double>(total); }
};

// x1' = (1-c) T(x1) + c T(x2), x2' = (1-c) T(x2) + c T(x1).
inline TwoSiteHistogram two_site_run(double c, const MapSpec& spec, const TwoSiteProtocol& protocol, int threads = 1) {
  check_coupling_strength(c);
  if (protocol.trajectories < 1 || protocol.steps < 1 || protocol.bins < 1)
    throw DomainError("two-site counts must be positive");
  if (protocol.burn_in < 0 || protocol.burn_in >= protocol.steps) throw DomainError("burn_in must lie in [0, steps)");
  const ShiftedChebyshev map(spec);
  const int bins = protocol.bins;
  const std::size_t chunks = static_cast<std::size_t>(std::min<std::int64_t>(protocol.trajectories, 64));
  std::vector<std::vector<std::uint64_t>> partial(chunks, std::vector<std::uint64_t>(static_cast<std::size_t>(bins) * bins));
  std::vector<std::uint64_t> diagonal(chunks, 0);
  auto bin_of = [bins](double x) { return std::min(bins - 1, static_cast<int>((x + 1.0) * 0.5 * bins)); };
  parallel_for(chunks, threads, [&](std::size_t chunk) {
    for (std::int64_t t = static_cast<std::int64_t>(chunk); t < protocol.trajectories;
         t += static_cast<std::int64_t>(chunks)) {
      Rng rng(derive_seed(protocol.seed, {static_cast<std::uint64_t>(t)}));
      double x1 = rng.uniform(-1.0, 1.0);
      double x2 = rng.uniform(-1.0, 1.0);
      for (std::int64_t n = 0; n < protocol.steps; ++n) {
        if (n >= protocol.burn_in) {
          ++partial[chunk][static_cast<std::size_t>(bin_of(x1)) * bins + bin_of(x2)];
          if (std::abs(x1 - x2) < protocol.diagonal_width) ++diagonal[chunk];
        }
        double t1 = map(x1), t2 = map(x2);
        x1 = std::clamp((1.0 - c) * t1 + c * t2, -1.0, 1.0);
        x2 = std::clamp((1.0 - c) * t2 + c * t1, -1.0, 1.0);
      }
    }
  });
  TwoSiteHistogram h;
  h.bins = bins;
  h.diagonal_width = protocol.diagonal_width;
  h.counts.assign(static_cast<std::size_t>(bins) * bins, 0);
  for (std::size_t k = 0; k < chunks; ++k) {
    for (std::size_t b = 0; b < h.counts.size(); ++b) h.counts[b] += partial[k][b];
    h.near_diagonal += diagonal[k];
  }
  for (auto v : h.counts) h.total += v;
  return h;
}

struct ScanProtocol {
  int sites = 5000;
  int steps = 1000;
  int burn_in = 100;
  int restarts = 1;  // >= 2 enables the ergodicity flag
};

struct SurfaceCell {
  NearestNeighbourCorrelation value;
  std::optional<bool> ergodicity_flag;  // true: restart spread exceeds 5x the c = 0 floor
};

struct CorrelationSurface {
  std::vector<double> c_grid;
  std::vector<double> a_grid;
  std::vector<SurfaceCell> cells;  // index i_c * a_grid.size() + i_a
  LatticeType type;
  ScanProtocol protocol;
  std::uint64_t master_seed = 0;

  const SurfaceCell& at(std::size_t i_c, std::size_t i_a) const { return cells[i_c * a_grid.size() + i_a]; }
};

inline void check_increasing(const std::vector<double>& grid, const char* name) {
  if (grid.empty()) throw DomainError(std::string(name) + " grid is empty");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1])) throw DomainError(std::string(name) + " grid must be strictly increasing");
}

inline LatticeRun make_run(const LatticeType& type, double a, double c, const ScanProtocol& p, std::uint64_t seed) {
  LatticeRun run;
  run.spec = MapSpec(type.order, a);
  run.coupling = type.coupling;
  run.c = c;
  run.sites = p.sites;
  run.steps = p.steps;
  run.burn_in = p.burn_in;
  run.seed = seed;
  return run;
}

// Cell (i_c, i_a), restart r uses seed derive_seed(master, {i_c, i_a, r}).
inline SurfaceCell measure_cell(const LatticeType& type, double a, double c, const ScanProtocol& p,
                                std::uint64_t master_seed, std::size_t i_c, std::size_t i_a) {
  const int restarts = std::max(1, p.restarts);
  std::vector<NearestNeighbourCorrelation> runs;
  for (int r = 0; r < restarts; ++r)
    runs.push_back(measure_snnc_tnnc(make_run(type, a, c, p, derive_seed(master_seed, {i_c, i_a, static_cast<std::uint64_t>(r)}))));
  if (restarts == 1) return SurfaceCell{runs.front(), std::nullopt};
  NearestNeighbourCorrelation mean;
  for (const auto& v : runs) {
    mean.snnc += v.snnc / restarts;
    mean.tnnc += v.tnnc / restarts;
    mean.snnc_stderr += v.snnc_stderr / restarts;
    mean.tnnc_stderr += v.tnnc_stderr / restarts;
  }
  mean.snnc_stderr /= std::sqrt(static_cast<double>(restarts));
  mean.tnnc_stderr /= std::sqrt(static_cast<double>(restarts));
  double spread = 0.0;
  for (const auto& v : runs) spread += (v.snnc - mean.snnc) * (v.snnc - mean.snnc);
  spread = std::sqrt(spread / (restarts - 1));
  const double floor = 0.5 / std::sqrt(static_cast<double>(p.sites) * p.steps);
  return SurfaceCell{mean, spread > 5.0 * floor};
}

inline CorrelationSurface scan_surface(const LatticeType& type, const std::vector<double>& a_grid,
                                       const std::vector<double>& c_grid, const ScanProtocol& protocol,
                                       std::uint64_t master_seed, int threads = 1) {
  check_increasing(a_grid, "a");
  check_increasing(c_grid, "c");
  for (double a : a_grid) MapSpec(type.order, a);
  for (double c : c_grid) check_coupling_strength(c);
  CorrelationSurface s{c_grid, a_grid, std::vector<SurfaceCell>(c_grid.size() * a_grid.size()), type, protocol,
                       master_seed};
  parallel_for(s.cells.size(), threads, [&](std::size_t k) {
    std::size_t i_c = k / a_grid.size(), i_a = k % a_grid.size();
    s.cells[k] = measure_cell(type, a_grid[i_a], c_grid[i_c], protocol, master_seed, i_c, i_a);
  });
  return s;
}

enum class ZeroTarget { kSnnc, kTnnc };

inline std::string to_string(ZeroTarget t) { return t == ZeroTarget::kSnnc ? "snnc" : "tnnc"; }

struct ZeroCrossing {
  double a = 0.0;
  ZeroTarget target = ZeroTarget::kSnnc;
  double c_star = 0.0;
  double half_width = 0.0;
  bool noise_limited = false;
};

// (value, standard error) of the target at coupling c; refinement call number k gets fresh randomness.
using CrossingRefiner = std::function<std::pair<double, double>(double c, std::uint64_t call)>;

inline constexpr double kZeroBracketWidth = 0.005;

// Bisects each sign change of the row, re-measuring at midpoints until the
// bracket is below kZeroBracketWidth or the midpoint value is within 3 sigma of 0.
inline std::vector<ZeroCrossing> zero_crossings(const std::vector<double>& c_grid, const std::vector<double>& row,
                                                double a, ZeroTarget target, const CrossingRefiner& refine) {
  if (c_grid.size() != row.size()) throw DomainError("row and grid sizes differ");
  std::vector<ZeroCrossing> out;
  std::uint64_t calls = 0;
  for (std::size_t i = 0; i + 1 < row.size(); ++i) {
    if (row[i] == 0.0) {
      out.push_back(ZeroCrossing{a, target, c_grid[i], 0.0, false});
      continue;
    }
    if (!(row[i] * row[i + 1] < 0.0)) continue;
    ZeroCrossing z{a, target};
    auto noisy = [&](double c) {
      auto [value, error] = refine(c, calls++);
      return NoisySample{value, error};
    };
    auto bracket = bisect_noisy(c_grid[i], c_grid[i + 1], row[i] < 0.0, noisy, kZeroBracketWidth, 3.0);
    z.c_star = bracket.midpoint();
    z.half_width = bracket.half_width();
    z.noise_limited = bracket.noise_limited;
    out.push_back(z);
  }
  if (!row.empty() && row.back() == 0.0) out.push_back(ZeroCrossing{a, target, c_grid.back(), 0.0, false});
  return out;
}

inline CrossingRefiner lattice_refiner(const LatticeType& type, double a, ZeroTarget target, const ScanProtocol& p,
                                       std::uint64_t seed) {
  return [=](double c, std::uint64_t call) {
    auto v = measure_snnc_tnnc(make_run(type, a, c, p, derive_seed(seed, {call})));
    return target == ZeroTarget::kSnnc ? std::make_pair(v.snnc, v.snnc_stderr) : std::make_pair(v.tnnc, v.tnnc_stderr);
  };
}

// Scans one a-row on c_grid, then refines every crossing by re-simulation.
inline std::vector<ZeroCrossing> zero_crossings(const LatticeType& type, double a, const std::vector<double>& c_grid,
                                                ZeroTarget target, const ScanProtocol& p, std::uint64_t master_seed,
                                                int threads = 1) {
  CorrelationSurface row = scan_surface(type, {a}, c_grid, p, derive_seed(master_seed, {0}), threads);
  std::vector<double> values;
  for (const auto& cell : row.cells) values.push_back(target == ZeroTarget::kSnnc ? cell.value.snnc : cell.value.tnnc);
  return zero_crossings(c_grid, values, a, target, lattice_refiner(type, a, target, p, derive_seed(master_seed, {1})));
}

struct SyncFixedPoint {
  double x_star = 0.0;
  std::vector<double> multipliers;  // mode k = 0..J-1
  bool stable = false;
};

inline double sync_map(Coupling coupling, double c, double t, double x) {
  switch (coupling) {
    case Coupling::kA: return t;
    case Coupling::kAMinus: return (1.0 - 2.0 * c) * t;
    case Coupling::kB: return (1.0 - c) * t + c * x;
    case Coupling::kBMinus: return (1.0 - c) * t - c * x;
  }
  return t;
}

// All synchronized fixed points with their ring-mode multipliers
// A family: ((1-c) +- c cos(2 pi k/J)) T'(x*), B family: (1-c) T'(x*) +- c cos(2 pi k/J).
inline std::vector<SyncFixedPoint> sync_fixed_points(Coupling coupling, const MapSpec& spec, double c, int sites) {
  check_coupling_strength(c);
  if (sites < 1) throw DomainError("J must be >= 1");
  if (coupling == Coupling::kB && c == 1.0) return {};  // x' = average of neighbours: every uniform state is fixed
  auto residual = [&](double x) { return sync_map(coupling, c, eval_shifted_cheby(spec, x), x) - x; };
  std::vector<double> roots;
  constexpr int kGrid = 20000;
  double prev_x = -1.0, prev_f = residual(-1.0);
  if (std::abs(prev_f) < 1e-14) roots.push_back(-1.0);
  for (int i = 1; i <= kGrid; ++i) {
    double x = -1.0 + 2.0 * i / kGrid;
    double f = residual(x);
    if (std::abs(f) < 1e-14) {
      roots.push_back(x);
    } else if (prev_f * f < 0.0 && std::abs(prev_f) >= 1e-14) {
      roots.push_back(bisect(prev_x, x, residual, 1e-15));
    }
    prev_x = x;
    prev_f = f;
  }
  const ShiftedChebyshev map(spec);
  const bool forward = coupling == Coupling::kA || coupling == Coupling::kAMinus;
  const double sign = (coupling == Coupling::kA || coupling == Coupling::kB) ? 1.0 : -1.0;
  std::vector<SyncFixedPoint> out;
  for (double x : roots) {
    SyncFixedPoint p{x, {}, true};
    double slope = map.derivative(x);
    for (int k = 0; k < sites; ++k) {
      double mode = std::cos(2.0 * kPi * k / sites);
      double mu = forward ? ((1.0 - c) + sign * c * mode) * slope : (1.0 - c) * slope + sign * c * mode;
      if (std::isnan(mu)) mu = std::numeric_limits<double>::infinity();
      p.multipliers.push_back(mu);
      if (!(std::abs(mu) < 1.0)) p.stable = false;
    }
    out.push_back(std::move(p));
  }
  return out;
}

// The stable synchronized fixed point if there is one, else the first found; none without roots.
inline std::optional<SyncFixedPoint> sync_fixed_point_stability(Coupling coupling, const MapSpec& spec, double c,
                                                                int sites) {
  auto points = sync_fixed_points(coupling, spec, c, sites);
  if (points.empty()) return std::nullopt;
  for (const auto& p : points)
    if (p.stable) return p;
  return points.front();
}

}  // namespace chebydyn
