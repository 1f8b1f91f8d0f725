// Prints the certificate of a few catalog networks.
#include <iomanip>
#include <iostream>

#include "netforge/netforge.hpp"

int main() {
  using namespace netforge;
  struct Entry {
    const char* name;
    CatalogParams params;
  };
  const Entry entries[] = {
      {"N_I", {.n = 4}},
      {"N_RegPol", {.n = 5}},
      {"N_Tri", {.weights = {1.0, 1.0, 1.0}}},
      {"polygon_center", {.k = 5}},
      {"polygon_center", {.k = 6}},
      {"N_V", {.theta = kPi / 6.0}},
      {"N_Y", {.nu = 0.3, .mu = 0.8}},
      {"N_C", {.a = 0.3, .b = 0.5}},
  };
  std::cout << std::left << std::setw(16) << "network" << std::setw(6) << "n" << std::setw(6) << "m" << std::setw(10)
            << "balanced" << std::setw(10) << "flexible" << std::setw(10) << "closable" << "gap_ratio\n";
  for (const auto& e : entries) {
    const Certificate c = certify(catalog(e.name, e.params));
    std::cout << std::setw(16) << e.name << std::setw(6) << c.n << std::setw(6) << c.m << std::setw(10) << c.balanced
              << std::setw(10) << c.flexible << std::setw(10) << (c.closable_defined ? (c.closable ? "1" : "0") : "-")
              << c.gap_ratio << "\n";
  }
}
