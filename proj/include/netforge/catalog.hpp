#pragma once

#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "netforge/network.hpp"

namespace netforge {

inline std::string indexed_id(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%02zu", prefix, i);
  return buf;
}

// Open chain z_j = j, j = 0..n-1.
inline WeightedNetwork chain_network(std::size_t n, std::vector<double> weights = {}) {
  if (n < 2) throw InputError("chain needs n >= 2");
  if (weights.empty()) weights.assign(n - 1, 1.0);
  if (weights.size() != n - 1) throw InputError("chain needs n-1 weights");
  std::vector<Vertex> v;
  std::vector<EdgeSpec> e;
  for (std::size_t j = 0; j < n; ++j) v.push_back({indexed_id("z", j), cplx(double(j), 0.0)});
  for (std::size_t j = 0; j + 1 < n; ++j) e.push_back({v[j].id, v[j + 1].id, weights[j]});
  return {v, e};
}

// Closed polygon through the given points, edge j = [z_j, z_{j+1}].
inline WeightedNetwork polygon_network(const std::vector<cplx>& z, std::vector<double> weights = {}) {
  const std::size_t n = z.size();
  if (n < 3) throw InputError("polygon needs at least 3 vertices");
  if (weights.empty()) weights.assign(n, 1.0);
  if (weights.size() != n) throw InputError("polygon needs n weights");
  std::vector<Vertex> v;
  std::vector<EdgeSpec> e;
  for (std::size_t j = 0; j < n; ++j) v.push_back({indexed_id("z", j), z[j]});
  for (std::size_t j = 0; j < n; ++j) e.push_back({v[j].id, v[(j + 1) % n].id, weights[j]});
  return {v, e};
}

// Regular n-gon with unit sides: z_j = xi^j / |1 - xi|.
inline WeightedNetwork regular_polygon(std::size_t n, std::vector<double> weights = {}) {
  if (n < 3) throw InputError("regular polygon needs n >= 3");
  const cplx xi = polar_unit(2.0 * kPi / double(n));
  std::vector<cplx> z;
  for (std::size_t j = 0; j < n; ++j) z.push_back(std::pow(xi, double(j)) / std::abs(1.0 - xi));
  return polygon_network(z, std::move(weights));
}

// Regular n-gon with sides of length k, each split into k unit edges.
inline WeightedNetwork regular_polygon_k(std::size_t n, std::size_t k, double weight = 1.0) {
  if (n < 3 || k < 1) throw InputError("regular_polygon_k needs n >= 3, k >= 1");
  const cplx xi = polar_unit(2.0 * kPi / double(n));
  const double s = std::abs(1.0 - xi);
  std::vector<cplx> z;
  for (std::size_t j = 0; j < n; ++j) {
    const cplx a = std::pow(xi, double(j)), b = std::pow(xi, double(j + 1));
    for (std::size_t jj = 0; jj < k; ++jj) z.push_back((double(k) * a + double(jj) * (b - a)) / s);
  }
  return polygon_network(z, std::vector<double>(n * k, weight));
}

// Equilateral unit triangle z_j = zeta^j/sqrt(3), rotated by theta; weights on [z0,z1],[z1,z2],[z2,z0].
inline WeightedNetwork triangle_network(double theta, double a01, double a12, double a20) {
  const cplx zeta = polar_unit(2.0 * kPi / 3.0);
  const cplx rot = polar_unit(theta);
  std::vector<Vertex> v;
  for (int j = 0; j < 3; ++j) v.push_back({indexed_id("t", j), rot * std::pow(zeta, double(j)) / std::sqrt(3.0)});
  return {v, {{"t00", "t01", a01}, {"t01", "t02", a12}, {"t02", "t00", a20}}};
}

// Regular k-gon at xi^j, j = 0..k-1, joined to the origin. Default weights are balanced.
inline WeightedNetwork polygon_center(std::size_t k, std::optional<double> ring = std::nullopt,
                                      std::optional<double> spoke = std::nullopt) {
  if (k < 3) throw InputError("polygon_center needs k >= 3");
  const double r = ring.value_or(1.0);
  const double s = spoke.value_or(-2.0 * std::sin(kPi / double(k)) * r);
  const cplx xi = polar_unit(2.0 * kPi / double(k));
  std::vector<Vertex> v{{"o", cplx{}}};
  std::vector<EdgeSpec> e;
  for (std::size_t j = 0; j < k; ++j) v.push_back({indexed_id("p", j), std::pow(xi, double(j))});
  for (std::size_t j = 0; j < k; ++j) {
    e.push_back({"o", v[j + 1].id, s});
    e.push_back({v[j + 1].id, v[(j + 1) % k + 1].id, r});
  }
  return {v, e};
}

inline WeightedNetwork network_nv(double theta) {
  if (!(theta > 0.0 && theta < kPi / 4.0)) throw InputError("N_V needs 0 < theta < pi/4");
  const double t = std::tan(theta), s = std::sin(theta), c = std::cos(theta);
  std::vector<Vertex> v{{"o", {0, 0}}, {"xp", {t, 0}}, {"xm", {-t, 0}}, {"yp", {0, 1}}, {"ym", {0, -1}}};
  std::vector<EdgeSpec> e{{"o", "xp", -2 * s}, {"o", "xm", -2 * s}, {"o", "yp", -2 * c}, {"o", "ym", -2 * c},
                          {"xp", "yp", 1},     {"yp", "xm", 1},     {"xm", "ym", 1},     {"ym", "xp", 1}};
  return {v, e};
}

// Side weights carry the sign that makes the network balanced (the vertical
// and horizontal sides are compressive relative to the four slanted edges).
inline WeightedNetwork network_ny(double nu, double mu) {
  if (!(nu > 0.0 && nu < mu)) throw InputError("N_Y needs 0 < nu < mu");
  const double d = mu - nu, h = std::sqrt(1.0 + d * d);
  const double c = d / h, s = 1.0 / h;
  std::vector<Vertex> v{{"a", {mu, 1}}, {"b", {mu, -1}}, {"c", {-mu, 1}}, {"d", {-mu, -1}}, {"np", {nu, 0}},
                        {"nm", {-nu, 0}}};
  std::vector<EdgeSpec> e{{"nm", "np", 2 * c}, {"np", "a", 1}, {"np", "b", 1}, {"nm", "c", 1}, {"nm", "d", 1},
                          {"a", "b", -s},      {"c", "d", -s}, {"c", "a", -c}, {"d", "b", -c}};
  return {v, e};
}

inline WeightedNetwork network_nc(double a, double b) {
  if (!(a > 0.0 && a < b && b < 1.0)) throw InputError("N_C needs 0 < a < b < 1");
  auto sq = [](double x) { return x * x; };
  std::vector<Vertex> v{{"c", {a, b}}, {"pp", {1, 1}}, {"mp", {-1, 1}}, {"mm", {-1, -1}}, {"pm", {1, -1}}};
  std::vector<EdgeSpec> e{
      {"c", "pp", -std::sqrt(1 / sq(1 - a) + 1 / sq(1 - b))}, {"c", "mp", -std::sqrt(1 / sq(1 + a) + 1 / sq(1 - b))},
      {"c", "mm", -std::sqrt(1 / sq(1 + a) + 1 / sq(1 + b))}, {"c", "pm", -std::sqrt(1 / sq(1 - a) + 1 / sq(1 + b))},
      {"pp", "mp", 1 / (1 - b)},                              {"pp", "pm", 1 / (1 - a)},
      {"mp", "mm", 1 / (1 + a)},                              {"mm", "pm", 1 / (1 + b)}};
  return {v, e};
}

// Complete graph on the five vertices of a regular pentagon.
inline WeightedNetwork complete_pentagon() {
  const cplx xi = polar_unit(2.0 * kPi / 5.0);
  std::vector<Vertex> v;
  std::vector<EdgeSpec> e;
  for (std::size_t j = 0; j < 5; ++j) v.push_back({indexed_id("z", j), std::pow(xi, double(j))});
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = i + 1; j < 5; ++j) e.push_back({v[i].id, v[j].id, 1.0});
  return {v, e};
}

struct CatalogParams {
  std::optional<int> n;
  std::optional<int> k;
  std::optional<double> theta;
  std::optional<double> nu;
  std::optional<double> mu;
  std::optional<double> a;
  std::optional<double> b;
  std::vector<double> weights;
};

inline std::vector<std::string> catalog_names() {
  return {"N_I", "N_RegPol", "N_RegPol_k", "N_Tri", "polygon_center", "N_V", "N_Y", "N_C", "K5"};
}

inline WeightedNetwork catalog(const std::string& name, const CatalogParams& p) {
  auto need = [&](const auto& opt, const char* what) {
    if (!opt) throw InputError("catalog '" + name + "' needs parameter " + what);
    return *opt;
  };
  auto positive_int = [&](const std::optional<int>& v, const char* what, int lo) {
    const int x = need(v, what);
    if (x < lo) throw InputError(std::string("parameter ") + what + " out of range");
    return std::size_t(x);
  };
  if (name == "N_I") return chain_network(positive_int(p.n, "n", 2), p.weights);
  if (name == "N_RegPol") return regular_polygon(positive_int(p.n, "n", 3), p.weights);
  if (name == "N_RegPol_k") {
    const double w = p.weights.empty() ? 1.0 : p.weights.front();
    return regular_polygon_k(positive_int(p.n, "n", 3), positive_int(p.k, "k", 1), w);
  }
  if (name == "N_Tri") {
    std::vector<double> w = p.weights.empty() ? std::vector<double>{1, 1, 1} : p.weights;
    if (w.size() != 3) throw InputError("N_Tri needs three weights");
    return triangle_network(p.theta.value_or(0.0), w[0], w[1], w[2]);
  }
  if (name == "polygon_center") return polygon_center(positive_int(p.k, "k", 3));
  if (name == "N_V") return network_nv(need(p.theta, "theta"));
  if (name == "N_Y") return network_ny(need(p.nu, "nu"), need(p.mu, "mu"));
  if (name == "N_C") return network_nc(need(p.a, "a"), need(p.b, "b"));
  if (name == "K5") return complete_pentagon();
  throw InputError("unknown catalog entry '" + name + "'");
}

}  // namespace netforge
