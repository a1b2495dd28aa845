// Renders a small space-time pattern of a coupled map lattice as ASCII shades.
//   lattice_pattern [type] [c] [a]     defaults: 2A 0.3 0

#include <iostream>
#include <string>

#include "chebydyn/cml.hpp"

int main(int argc, char** argv) {
  using namespace chebydyn;
  try {
    LatticeType type = parse_lattice_type(argc > 1 ? argv[1] : "2A");
    LatticeRun run;
    run.spec = MapSpec::parse(type.order, argc > 3 ? argv[3] : "0");
    run.coupling = type.coupling;
    run.c = argc > 2 ? std::stod(argv[2]) : 0.3;
    run.sites = 72;
    run.steps = 40;
    run.burn_in = 0;
    run.seed = 1;
    SpaceTimeField field = pattern_dump(run);
    const std::string shades = " .:-=+*#%@";
    for (int t = 0; t < field.rows; ++t) {
      std::string line;
      for (int j = 0; j < field.cols; ++j) {
        double x = field.at(t, j);
        auto k = static_cast<std::size_t>((x + 1.0) * 0.5 * static_cast<double>(shades.size() - 1) + 0.5);
        line += shades[std::min(k, shades.size() - 1)];
      }
      std::cout << line << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
