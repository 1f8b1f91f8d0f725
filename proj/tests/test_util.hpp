#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "netforge/catalog.hpp"
#include "netforge/network.hpp"

namespace nftest {

using netforge::cplx;

// Random connected network on n <= 12 vertices: a random spanning tree plus extra edges.
inline netforge::WeightedNetwork random_network(std::mt19937_64& rng, std::size_t n, std::size_t extra) {
  std::uniform_real_distribution<double> U(-3.0, 3.0), W(0.2, 2.0);
  std::bernoulli_distribution neg(0.4);
  std::vector<netforge::Vertex> v;
  for (std::size_t i = 0; i < n; ++i) v.push_back({netforge::indexed_id("v", i), cplx(U(rng), U(rng))});
  std::vector<netforge::EdgeSpec> e;
  std::vector<std::vector<char>> used(n, std::vector<char>(n, 0));
  auto weight = [&] { return (neg(rng) ? -1.0 : 1.0) * W(rng); };
  for (std::size_t i = 1; i < n; ++i) {
    const std::size_t j = std::uniform_int_distribution<std::size_t>(0, i - 1)(rng);
    used[i][j] = used[j][i] = 1;
    e.push_back({v[i].id, v[j].id, weight()});
  }
  for (std::size_t k = 0; k < extra; ++k) {
    const std::size_t i = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    const std::size_t j = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    if (i == j || used[i][j]) continue;
    used[i][j] = used[j][i] = 1;
    e.push_back({v[i].id, v[j].id, weight()});
  }
  return {v, e};
}

// Direct evaluation of F(p) = sum_q a (q - p)/|q - p| by vertex ids, independent of the library adjacency.
inline std::vector<cplx> oracle_forces(const netforge::WeightedNetwork& net) {
  std::vector<cplx> F(net.n());
  for (const auto& e : net.edges()) {
    const cplx p = net.vertex(e.u).pos, q = net.vertex(e.v).pos;
    F[e.u] += e.weight * (q - p) / std::abs(q - p);
    F[e.v] += e.weight * (p - q) / std::abs(q - p);
  }
  return F;
}

}  // namespace nftest
