#include "catch_amalgamated.hpp"

#include "chebydyn/cml.hpp"

using namespace chebydyn;

namespace {

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

LatticeRun small_run(const char* type, double c, int sites, int steps, std::uint64_t seed) {
  LatticeType t = parse_lattice_type(type);
  LatticeRun run;
  run.spec = MapSpec(t.order, 0.0);
  run.coupling = t.coupling;
  run.c = c;
  run.sites = sites;
  run.steps = steps;
  run.burn_in = 50;
  run.seed = seed;
  return run;
}

}  // namespace

TEST_CASE("lattice type parsing") {
  auto t = parse_lattice_type("2A-");
  CHECK(t.order == 2);
  CHECK(t.coupling == Coupling::kAMinus);
  CHECK(parse_lattice_type("3B").coupling == Coupling::kB);
  CHECK(parse_lattice_type("2B-").coupling == Coupling::kBMinus);
  CHECK(to_string(parse_lattice_type("12A")) == "12A");
  CHECK(to_string(t) == "2A-");
  CHECK_THROWS_AS(parse_lattice_type("A"), DomainError);
  CHECK_THROWS_AS(parse_lattice_type("2C"), DomainError);
}

TEST_CASE("one lattice step") {
  MapSpec t2(2, 0.0);
  // c = 0 decouples the sites.
  auto free = cml_step({0.5, -0.3, 0.9}, Coupling::kA, 0.0, t2);
  CHECK(free[0] == Catch::Approx(-0.5));
  CHECK(free[1] == Catch::Approx(2 * 0.09 - 1));
  CHECK(free[2] == Catch::Approx(2 * 0.81 - 1));

  // Uniform states stay uniform under forward diffusive coupling.
  auto uniform = cml_step({0.3, 0.3, 0.3, 0.3}, Coupling::kA, 0.4, t2);
  for (double x : uniform) CHECK(x == Catch::Approx(2 * 0.09 - 1));

  // A- at c = 1/2 sends any uniform state to zero.
  for (double x : cml_step({0.7, 0.7, 0.7}, Coupling::kAMinus, 0.5, t2)) CHECK(x == Catch::Approx(0.0).margin(1e-15));

  // B at c = 1 averages the raw neighbours.
  auto b = cml_step({0.2, -0.4, 0.6}, Coupling::kB, 1.0, t2);
  CHECK(b[0] == Catch::Approx(0.5 * (0.6 - 0.4)));
  CHECK(b[1] == Catch::Approx(0.5 * (0.2 + 0.6)));

  // B- at c = 1 subtracts them.
  auto bm = cml_step({0.2, -0.4, 0.6}, Coupling::kBMinus, 1.0, t2);
  CHECK(bm[1] == Catch::Approx(-0.5 * (0.2 + 0.6)));

  CHECK_THROWS_AS(cml_step({0.1}, Coupling::kA, 1.5, t2), DomainError);
  CHECK_THROWS_AS(cml_step({1.1}, Coupling::kA, 0.5, t2), DomainError);
  CHECK(cml_step({0.5}, Coupling::kA, 0.5, t2).size() == 1);  // J = 1 couples a site to itself
}

TEST_CASE("lattice states stay in [-1, 1]", "[property]") {
  for (const char* type : {"2A", "2A-", "2B", "2B-", "3A", "3B-", "4A"})
    for (double c : {0.0, 0.13, 0.5, 0.87, 1.0}) {
      LatticeRun run = small_run(type, c, 64, 1, 5);
      Lattice lattice(run);
      for (int n = 0; n < 300; ++n) {
        lattice.advance();
        REQUIRE(max_abs(lattice.state()) <= 1.0);
      }
    }
}

TEST_CASE("lattices are reproducible from the seed") {
  auto run = small_run("2A", 0.3, 100, 20, 9);
  auto a = pattern_dump(run);
  auto b = pattern_dump(run);
  CHECK(a.values == b.values);
  CHECK(a.rows == 20);
  CHECK(a.cols == 100);
  run.seed = 10;
  CHECK(pattern_dump(run).values != a.values);
}

TEST_CASE("run validation") {
  auto run = small_run("2A", 0.3, 0, 10, 1);
  CHECK_THROWS_AS(Lattice(run), DomainError);
  run = small_run("2A", 0.3, 10, 0, 1);
  CHECK_THROWS_AS(measure_snnc_tnnc(run), DomainError);
  run = small_run("2A", -0.1, 10, 10, 1);
  CHECK_THROWS_AS(measure_snnc_tnnc(run), DomainError);
}

TEST_CASE("uncoupled lattices show no nearest-neighbour correlation", "[property]") {
  for (const char* type : {"2A", "3A"}) {
    auto v = measure_snnc_tnnc(small_run(type, 0.0, 2000, 200, 17));
    CHECK(std::abs(v.snnc) < 4 * v.snnc_stderr);
    CHECK(std::abs(v.tnnc) < 4 * v.tnnc_stderr);
    CHECK(v.snnc_stderr == Catch::Approx(0.5 / std::sqrt(2000.0 * 200.0)).epsilon(0.5));
  }
}

TEST_CASE("anti-diffusive coupling at c = 1/2 collapses to zero") {
  auto run = small_run("2A-", 0.5, 1000, 1, 3);
  Lattice lattice(run);
  lattice.advance(200);
  CHECK(max_abs(lattice.state()) < 1e-6);

  auto fixed = sync_fixed_point_stability(Coupling::kAMinus, MapSpec(2, 0.0), 0.5, 1000);
  REQUIRE(fixed);
  CHECK(fixed->x_star == Catch::Approx(0.0).margin(1e-12));
  CHECK(fixed->stable);
}

TEST_CASE("synchronized fixed points") {
  // c = 0: fixed points of T_2 are -1/2 and 1, both repelling.
  auto points = sync_fixed_points(Coupling::kA, MapSpec(2, 0.0), 0.0, 8);
  REQUIRE(points.size() == 2);
  CHECK(points[0].x_star == Catch::Approx(-0.5));
  CHECK(points[1].x_star == Catch::Approx(1.0));
  CHECK(points[0].multipliers.front() == Catch::Approx(-2.0));
  CHECK(points[1].multipliers.front() == Catch::Approx(4.0));
  CHECK_FALSE(points[0].stable);

  // B at c = 1 fixes every uniform state, so no isolated point is reported.
  CHECK_FALSE(sync_fixed_point_stability(Coupling::kB, MapSpec(2, 0.0), 1.0, 8));
  CHECK_THROWS_AS(sync_fixed_points(Coupling::kA, MapSpec(2, 0.0), 0.5, 0), DomainError);

  // Every reported point is a root of the synchronized map.
  for (auto coupling : {Coupling::kA, Coupling::kAMinus, Coupling::kB, Coupling::kBMinus})
    for (double c : {0.1, 0.35, 0.8}) {
      MapSpec spec = MapSpec::parse(3, "-pi/7");
      for (const auto& p : sync_fixed_points(coupling, spec, c, 4)) {
        double image = sync_map(coupling, c, eval_shifted_cheby(spec, p.x_star), p.x_star);
        REQUIRE(image == Catch::Approx(p.x_star).margin(1e-12));
        REQUIRE(p.multipliers.size() == 4);
      }
    }
}

TEST_CASE("two-site synchronization sets in above c = 1/4") {
  TwoSiteProtocol protocol{200, 2100, 100, 40, 0.05, 4};
  auto loose = two_site_run(0.0, MapSpec(2, 0.0), protocol);
  auto near = two_site_run(0.201, MapSpec(2, 0.0), protocol);
  auto tight = two_site_run(0.3, MapSpec(2, 0.0), protocol);
  CHECK(loose.total == 200u * 2000u);
  CHECK(loose.diagonal_fraction() < 0.1);
  CHECK(near.diagonal_fraction() < 0.5);  // transverse exponent log(2 |1 - 2c|) > 0 below c = 1/4
  CHECK(tight.diagonal_fraction() > 0.99);
  double mass = 0.0;
  for (int i = 0; i < tight.bins; ++i)
    for (int k = 0; k < tight.bins; ++k) mass += tight.density(i, k) * tight.bin_width() * tight.bin_width();
  CHECK(mass == Catch::Approx(1.0));
  CHECK(two_site_run(0.3, MapSpec(2, 0.0), protocol, 3).counts == tight.counts);
}

TEST_CASE("surface scans") {
  ScanProtocol p{200, 50, 10, 1};
  LatticeType type = parse_lattice_type("2A");
  auto s = scan_surface(type, {-0.5, 0.0}, {0.0, 0.5}, p, 21);
  REQUIRE(s.cells.size() == 4);
  CHECK_FALSE(s.at(0, 0).ergodicity_flag.has_value());
  auto again = scan_surface(type, {-0.5, 0.0}, {0.0, 0.5}, p, 21, 3);
  for (std::size_t k = 0; k < 4; ++k) CHECK(again.cells[k].value.snnc == s.cells[k].value.snnc);

  p.restarts = 3;
  auto flagged = scan_surface(type, {0.0}, {0.0}, p, 21);
  CHECK(flagged.at(0, 0).ergodicity_flag.has_value());

  CHECK_THROWS_AS(scan_surface(type, {0.0, 0.0}, {0.1}, p, 1), DomainError);
  CHECK_THROWS_AS(scan_surface(type, {0.5}, {0.1}, p, 1), DomainError);
  CHECK_THROWS_AS(scan_surface(type, {0.0}, {1.2}, p, 1), DomainError);
}

TEST_CASE("zero crossings from a scripted refiner") {
  std::vector<double> grid{0.0, 0.1, 0.2, 0.3, 0.4};
  auto exact = [](double c, std::uint64_t) { return std::make_pair(c - 0.234, 1e-6); };
  std::vector<double> row;
  for (double c : grid) row.push_back(c - 0.234);
  auto zeros = zero_crossings(grid, row, 0.0, ZeroTarget::kSnnc, exact);
  REQUIRE(zeros.size() == 1);
  CHECK(zeros[0].c_star == Catch::Approx(0.234).margin(kZeroBracketWidth));
  CHECK(zeros[0].half_width <= kZeroBracketWidth);
  CHECK_FALSE(zeros[0].noise_limited);

  auto noisy = [](double c, std::uint64_t) { return std::make_pair(c - 0.234, 1.0); };
  auto coarse = zero_crossings(grid, row, 0.0, ZeroTarget::kTnnc, noisy);
  REQUIRE(coarse.size() == 1);
  CHECK(coarse[0].noise_limited);
  CHECK(coarse[0].c_star - coarse[0].half_width <= 0.234);
  CHECK(coarse[0].c_star + coarse[0].half_width >= 0.234);

  CHECK(zero_crossings(grid, {1, 1, 1, 1, 1}, 0.0, ZeroTarget::kSnnc, exact).empty());
  CHECK_THROWS_AS(zero_crossings(grid, {1, 2}, 0.0, ZeroTarget::kSnnc, exact), DomainError);
}

TEST_CASE("live zero crossing on a small lattice") {
  ScanProtocol p{1000, 200, 50, 1};
  auto zeros = zero_crossings(parse_lattice_type("2A"), 0.0, {0.8, 0.95}, ZeroTarget::kTnnc, p, 8);
  REQUIRE(zeros.size() == 1);
  CHECK(zeros[0].c_star == Catch::Approx(0.88).margin(0.03));
}
