// Projected force between two equal-sign bumps against the interaction function.
#include <cmath>
#include <iomanip>
#include <iostream>

#include "netforge/netforge.hpp"

int main() {
  using namespace netforge;
  const InteractionTable& table = default_table();
  const Calibration cal = calibrate_projection(table);
  std::cout << "calibration sign " << cal.sigma << "\n";
  std::cout << std::left << std::setw(6) << "s" << std::setw(15) << "g_x" << std::setw(15) << "Upsilon(s)"
            << "rel.dev\n";
  for (double s : {8.0, 10.0, 12.0, 14.0}) {
    FieldEvaluator ev({{cplx{}, 1}, {cplx(s, 0.0), 1}}, table, s);
    const cplx g = ev.project(0, s, cal.sigma);
    const double u = table.upsilon(s);
    std::cout << std::setw(6) << s << std::setw(15) << g.real() << std::setw(15) << u << std::abs(g - u) / u << "\n";
  }
}
