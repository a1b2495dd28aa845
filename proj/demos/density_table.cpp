// Prints the invariant step density of T_{N,a} cell by cell.
//   density_table [N] [a]     defaults: 3 -pi/9

#include <iomanip>
#include <iostream>

#include "chebydyn/density.hpp"

int main(int argc, char** argv) {
  using namespace chebydyn;
  try {
    int order = argc > 1 ? std::stoi(argv[1]) : 3;
    MapSpec spec = MapSpec::parse(order, argc > 2 ? argv[2] : "-pi/9");
    StepDensity rho = exact_step_density(spec, Orientation::kMirrored, Normalization::kUnitCellSum);
    std::cout << "T_{" << spec.order() << "," << spec.angle_token() << "}: "
              << rho.partition().cell_count() << " cells\n";
    for (const Plateau& p : rho.plateaus())
      std::cout << "  [" << std::setw(6) << to_string(p.lower) << ", " << std::setw(6) << to_string(p.upper)
                << ")  " << to_string(p.value) << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
