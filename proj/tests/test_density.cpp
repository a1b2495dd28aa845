#include "catch_amalgamated.hpp"

#include "chebydyn/density.hpp"
#include "chebydyn/serialize.hpp"
#include "oracles.hpp"

using namespace chebydyn;

namespace {

Rational q(long p, long d) { return make_rational(p, d); }

const char* kAppendixMatrix[] = {"1100000000", "1110000000", "0001110000", "0000001111", "0000000011",
                                 "0000011100", "1111100000", "1110000000", "0001110000", "0000001110"};

// (L rho)(y) = sum over branch preimages rho(x) / N, evaluated at cell midpoints.
Rational pf_residual(const PiecewiseLinearMap& g, const StepDensity& rho) {
  const auto& pts = rho.partition().points;
  Rational worst = 0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    Rational y = (pts[i] + pts[i + 1]) / 2;
    Rational image = 0;
    for (const Branch& b : g.branches()) {
      Rational x = (y - b.offset) / b.slope;
      if (x >= b.lower && x <= b.upper) {
        std::size_t cell = rho.partition().cell_of(to_double(x));
        image += rho.values()[cell] / g.order();
      }
    }
    Rational diff = image - rho.values()[i];
    worst = std::max(worst, diff < 0 ? Rational(-diff) : diff);
  }
  return worst;
}

}  // namespace

TEST_CASE("Markov partition for N = 3, a = -pi/9") {
  auto spec = MapSpec::parse(3, "-pi/9");
  auto canonical = build_markov_partition(build_pwl(spec));
  CHECK(canonical.points == std::vector<Rational>{0, q(1, 9), q(2, 9), q(8, 27), q(4, 9), q(5, 9), q(17, 27),
                                                  q(7, 9), q(8, 9), q(26, 27), 1});
  auto mirrored = build_markov_partition(build_pwl(spec, Orientation::kMirrored));
  CHECK(mirrored.points == std::vector<Rational>{0, q(1, 27), q(1, 9), q(2, 9), q(10, 27), q(4, 9), q(5, 9),
                                                 q(19, 27), q(7, 9), q(8, 9), 1});
  CHECK(mirrored.cell_count() == 10);
  CHECK(mirrored.cell_of(0.0) == 0);
  CHECK(mirrored.cell_of(1.0) == 9);
  CHECK(mirrored.cell_of(1.0 / 9.0 + 1e-15) == 2);
}

TEST_CASE("transition matrix matches the published 10x10 matrix") {
  auto g = build_pwl(MapSpec::parse(3, "-pi/9"), Orientation::kMirrored);
  auto a = build_transition_matrix(build_markov_partition(g), g);
  REQUIRE(a.size == 10);
  for (std::size_t i = 0; i < 10; ++i)
    for (std::size_t j = 0; j < 10; ++j) REQUIRE(a.at(i, j) == kAppendixMatrix[i][j] - '0');
}

TEST_CASE("transition matrix row sums count branch coverage") {
  auto g = build_pwl(MapSpec::parse(3, "-pi/9"));
  auto a = build_transition_matrix(build_markov_partition(g), g);
  for (std::size_t i = 0; i < a.size; ++i) {
    int row = 0;
    for (std::size_t j = 0; j < a.size; ++j) row += a.at(i, j);
    CHECK(row >= 1);
  }
}

TEST_CASE("exact density for N = 3, a = -pi/9") {
  auto spec = MapSpec::parse(3, "-pi/9");
  auto unit = exact_step_density(spec, Orientation::kMirrored);
  CHECK(unit.values() == std::vector<Rational>{q(19, 11), q(19, 11), q(38, 33), q(21, 22), q(21, 22), 1,
                                               q(19, 22), q(19, 22), q(28, 33), q(7, 11)});
  CHECK(unit.integral() == 1);

  auto sums = exact_step_density(spec, Orientation::kMirrored, Normalization::kUnitCellSum);
  std::vector<Rational> plateau_values;
  for (const auto& p : sums.plateaus()) plateau_values.push_back(p.value);
  CHECK(plateau_values == std::vector<Rational>{q(19, 118), q(19, 177), q(21, 236), q(11, 118), q(19, 236),
                                                q(14, 177), q(7, 118)});
  CHECK(sums.plateaus().front().upper == q(1, 9));

  // The canonical orientation is the same density reflected.
  auto canonical = exact_step_density(spec, Orientation::kCanonical, Normalization::kUnitCellSum);
  std::vector<Rational> reversed;
  for (const auto& p : canonical.plateaus()) reversed.insert(reversed.begin(), p.value);
  CHECK(reversed == plateau_values);
}

TEST_CASE("step density lookups") {
  auto rho = exact_step_density(MapSpec::parse(3, "-pi/9"), Orientation::kMirrored);
  CHECK(rho(0.0) == Catch::Approx(19.0 / 11.0));
  CHECK(rho(1.0) == Catch::Approx(7.0 / 11.0));
  CHECK(rho.cdf(0.0) == 0.0);
  CHECK(rho.cdf(1.0) == Catch::Approx(1.0));
  for (int i = 0; i <= 100; ++i) {
    double u = i / 100.0 * 0.999999;
    REQUIRE(rho.cdf(rho.quantile(u)) == Catch::Approx(u).margin(1e-12));
  }
}

TEST_CASE("exact densities are fixed points of the transfer operator", "[property]") {
  for (int n = 2; n <= 7; ++n)
    for (long p : {0L, 1L, 2L, 3L})
      for (long d : {7L, 9L, 10L}) {
        if (2 * p > d) continue;
        for (auto orientation : {Orientation::kCanonical, Orientation::kMirrored}) {
          auto spec = MapSpec::exact(n, p, d);
          auto g = build_pwl(spec, orientation);
          auto partition = build_markov_partition(g);
          auto a = build_transition_matrix(partition, g);
          auto basis = transfer_kernel_basis(a, n);
          REQUIRE_FALSE(basis.empty());
          if (basis.size() != 1) continue;
          auto rho = invariant_step_density(a, partition, n);
          REQUIRE(rho.integral() == 1);
          REQUIRE(pf_residual(g, rho) == 0);
          for (const auto& v : rho.values()) REQUIRE(v >= 0);
        }
      }
}

TEST_CASE("star condition gives column sums N, so the constant is invariant", "[property]") {
  for (int n : {2, 4, 6})
    for (long p : {0L, 1L, 2L})
      for (long d : {4L, 5L, 9L}) {
        auto spec = MapSpec::exact(n, p, d);
        REQUIRE(star_condition(spec));
        auto g = build_pwl(spec);
        auto a = build_transition_matrix(build_markov_partition(g), g);
        for (std::size_t j = 0; j < a.size; ++j) {
          int column = 0;
          for (std::size_t i = 0; i < a.size; ++i) column += a.at(i, j);
          REQUIRE(column == n);
        }
      }
  CHECK(star_condition(MapSpec(3, 0.0)));
  CHECK_FALSE(star_condition(MapSpec::parse(3, "-pi/9")));
}

TEST_CASE("N = 2 with a != 0 splits into two ergodic components") {
  auto quarter = build_pwl(MapSpec::parse(2, "-pi/4"));
  auto quarter_partition = build_markov_partition(quarter);
  auto quarter_matrix = build_transition_matrix(quarter_partition, quarter);
  CHECK(quarter_partition.points == std::vector<Rational>{0, q(3, 8), q(3, 4), q(7, 8), 1});
  CHECK(invariant_step_density_on(quarter_matrix, quarter_partition, 2, 0, q(3, 4))(0.5) == Catch::Approx(4.0 / 3.0));

  auto spec = MapSpec::parse(2, "-pi/2");
  auto g = build_pwl(spec);
  auto partition = build_markov_partition(g);
  auto a = build_transition_matrix(partition, g);
  CHECK(transfer_kernel_basis(a, 2).size() == 2);
  CHECK_THROWS_WITH(invariant_step_density(a, partition, 2), "degenerate kernel");
  CHECK_THROWS_WITH(exact_step_density(spec), "degenerate kernel");

  auto left = invariant_step_density_on(a, partition, 2, 0, q(1, 2));
  auto right = invariant_step_density_on(a, partition, 2, q(1, 2), 1);
  CHECK(left.integral() == 1);
  CHECK(right.integral() == 1);
  CHECK(left(0.25) == Catch::Approx(2.0));
  CHECK(left(0.75) == 0.0);
  CHECK(pf_residual(g, left) == 0);
  CHECK_THROWS_AS(invariant_step_density_on(a, partition, 2, 0, q(3, 4)), StructureError);
}

TEST_CASE("integer kernel") {
  using Row = std::vector<BigInt>;
  auto basis = integer_kernel({Row{1, 2, 3}, Row{2, 4, 6}});
  REQUIRE(basis.size() == 2);
  for (const auto& v : basis) CHECK(v[0] + 2 * v[1] + 3 * v[2] == 0);
  CHECK(integer_kernel({Row{1, 0}, Row{0, 1}}).empty());
  auto line = integer_kernel({Row{-1, 1}, Row{1, -1}});
  REQUIRE(line.size() == 1);
  CHECK(line[0] == std::vector<Rational>{1, 1});
}

TEST_CASE("guards and structure errors") {
  auto g = build_pwl(MapSpec(3, -0.3));
  CHECK_THROWS_AS(build_markov_partition(g, 2000), GuardError);
  CHECK_THROWS_WITH(build_markov_partition(g, 2000), "partition explosion");
  CHECK_THROWS_AS(exact_step_density(MapSpec(3, -0.3)), DomainError);

  auto exact = build_pwl(MapSpec::parse(3, "-pi/9"));
  MarkovPartition coarse{{0, q(8, 27), q(17, 27), q(26, 27), 1}};
  CHECK_THROWS_WITH(build_transition_matrix(coarse, exact), "not Markov");
}

TEST_CASE("pullback densities integrate to one") {
  CHECK(arcsine_density().integral() == Catch::Approx(1.0).margin(1e-10));
  CHECK(arcsine_density()(0.0) == Catch::Approx(1.0 / kPi));
  CHECK(std::isinf(arcsine_density()(1.0)));
  for (const char* a : {"-pi/9", "-pi/5", "-pi/3"}) {
    auto rho = density_pullback(exact_step_density(MapSpec::parse(3, a)));
    CHECK(rho.integral() == Catch::Approx(1.0).margin(1e-9));
    CHECK(rho.cdf(1.0) == Catch::Approx(1.0).margin(1e-12));
    CHECK(rho.cdf(-1.0) == 0.0);
  }
}

TEST_CASE("histograms converge to the exact density") {
  HistogramProtocol protocol{200, 2000, 100, 100, 7};
  auto arcsine = histogram_estimate(MapSpec(2, 0.0), protocol);
  CHECK(arcsine.total == 200u * 1900u);
  CHECK(l1_distance(arcsine, [](double x) { return arcsine_density().cdf(x); }) < 0.03);

  auto spec = MapSpec::parse(3, "-pi/9");
  auto rho = density_pullback(exact_step_density(spec));
  auto shifted = histogram_estimate(spec, protocol);
  CHECK(l1_distance(shifted, [&](double x) { return rho.cdf(x); }) < 0.03);
  // The arcsine law is visibly wrong once the star condition fails.
  CHECK(l1_distance(shifted, [](double x) { return arcsine_density().cdf(x); }) > 0.05);
}

TEST_CASE("histograms do not depend on the thread count") {
  HistogramProtocol protocol{100, 300, 10, 50, 11};
  auto spec = MapSpec::parse(4, "-pi/5");
  auto one = histogram_estimate(spec, protocol, 1);
  auto three = histogram_estimate(spec, protocol, 3);
  CHECK(one.counts == three.counts);
  CHECK_THROWS_AS(histogram_estimate(spec, HistogramProtocol{10, 10, 10, 10, 0}), DomainError);
}

TEST_CASE("step density json round trip") {
  auto rho = exact_step_density(MapSpec::parse(3, "-pi/9"), Orientation::kMirrored);
  auto j = to_json(rho);
  CHECK(j["values"][0] == "19/11");
  auto back = step_density_from_json(j);
  CHECK(back.values() == rho.values());
  CHECK(back.partition().points == rho.partition().points);
}
