#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "netforge/geometry.hpp"

namespace netforge {

struct Vertex {
  std::string id;
  cplx pos;
};

// Endpoints are vertex indices with id(u) < id(v); weight is nonzero.
struct Edge {
  std::size_t u = 0;
  std::size_t v = 0;
  double weight = 1.0;
};

struct EdgeSpec {
  std::string u;
  std::string v;
  double weight = 1.0;
};

class WeightedNetwork {
 public:
  WeightedNetwork() = default;

  WeightedNetwork(std::vector<Vertex> vertices, const std::vector<EdgeSpec>& edges)
      : vertices_(std::move(vertices)) {
    if (vertices_.empty()) throw InputError("network needs at least one vertex");
    for (std::size_t i = 0; i < vertices_.size(); ++i) {
      const auto& v = vertices_[i];
      if (!std::isfinite(v.pos.real()) || !std::isfinite(v.pos.imag()))
        throw InputError("non-finite position for vertex '" + v.id + "'");
      if (!index_.emplace(v.id, i).second) throw InputError("duplicate vertex id '" + v.id + "'");
    }
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (const auto& e : edges) {
      std::size_t a = index_of(e.u), b = index_of(e.v);
      if (a == b) throw InputError("edge with identical endpoints '" + e.u + "'");
      if (!std::isfinite(e.weight)) throw InputError("non-finite weight on edge " + e.u + "-" + e.v);
      if (e.weight == 0.0) throw InputError("zero weight on edge " + e.u + "-" + e.v);
      if (vertices_[b].id < vertices_[a].id) std::swap(a, b);
      if (!seen.emplace(a, b).second) throw InputError("duplicate edge " + e.u + "-" + e.v);
      edges_.push_back({a, b, e.weight});
    }
    std::sort(edges_.begin(), edges_.end(), [&](const Edge& x, const Edge& y) {
      const auto kx = std::tie(vertices_[x.u].id, vertices_[x.v].id);
      const auto ky = std::tie(vertices_[y.u].id, vertices_[y.v].id);
      return kx < ky;
    });
    check_lengths();
    build_adjacency();
  }

  std::size_t n() const { return vertices_.size(); }
  std::size_t m() const { return edges_.size(); }
  const std::vector<Vertex>& vertices() const { return vertices_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const Vertex& vertex(std::size_t i) const { return vertices_[i]; }
  const Edge& edge(std::size_t k) const { return edges_[k]; }
  cplx pos(std::size_t i) const { return vertices_[i].pos; }
  // Incident edge indices of vertex i, in canonical edge order.
  const std::vector<std::size_t>& incident(std::size_t i) const { return adjacency_[i]; }

  std::size_t index_of(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw InputError("unknown vertex id '" + id + "'");
    return it->second;
  }
  bool has_vertex(const std::string& id) const { return index_.count(id) != 0; }

  std::optional<std::size_t> edge_between(std::size_t a, std::size_t b) const {
    for (std::size_t k : adjacency_[a]) {
      const Edge& e = edges_[k];
      if ((e.u == a && e.v == b) || (e.u == b && e.v == a)) return k;
    }
    return std::nullopt;
  }

  std::size_t other(std::size_t k, std::size_t i) const { return edges_[k].u == i ? edges_[k].v : edges_[k].u; }

  std::vector<cplx> positions() const {
    std::vector<cplx> out(n());
    for (std::size_t i = 0; i < n(); ++i) out[i] = vertices_[i].pos;
    return out;
  }
  std::vector<double> weights() const {
    std::vector<double> out(m());
    for (std::size_t k = 0; k < m(); ++k) out[k] = edges_[k].weight;
    return out;
  }

  WeightedNetwork with_positions(const std::vector<cplx>& pos) const {
    if (pos.size() != n()) throw InputError("position vector has wrong size");
    WeightedNetwork out = *this;
    for (std::size_t i = 0; i < n(); ++i) {
      if (!std::isfinite(pos[i].real()) || !std::isfinite(pos[i].imag()))
        throw InputError("non-finite position");
      out.vertices_[i].pos = pos[i];
    }
    out.check_lengths();
    return out;
  }

  WeightedNetwork with_weights(const std::vector<double>& w) const {
    if (w.size() != m()) throw InputError("weight vector has wrong size");
    WeightedNetwork out = *this;
    for (std::size_t k = 0; k < m(); ++k) {
      if (!std::isfinite(w[k]) || w[k] == 0.0) throw InputError("weights must be finite and nonzero");
      out.edges_[k].weight = w[k];
    }
    return out;
  }

  double weight_l1() const {
    double s = 0.0;
    for (const auto& e : edges_) s += std::abs(e.weight);
    return s;
  }

  double max_radius() const {
    double r = 0.0;
    for (const auto& v : vertices_) r = std::max(r, std::abs(v.pos));
    return r;
  }

  double diameter() const {
    double d = 0.0;
    for (std::size_t i = 0; i < n(); ++i)
      for (std::size_t j = i + 1; j < n(); ++j) d = std::max(d, std::abs(pos(i) - pos(j)));
    return d;
  }

 private:
  void check_lengths() const {
    double scale = 0.0;
    for (const auto& v : vertices_) scale = std::max(scale, std::abs(v.pos));
    const double tol = 1e-14 * std::max(scale, 1.0);
    for (const auto& e : edges_)
      if (std::abs(pos(e.u) - pos(e.v)) <= tol)
        throw GeometryError("zero-length edge " + vertices_[e.u].id + "-" + vertices_[e.v].id);
  }

  void build_adjacency() {
    adjacency_.assign(n(), {});
    for (std::size_t k = 0; k < m(); ++k) {
      adjacency_[edges_[k].u].push_back(k);
      adjacency_[edges_[k].v].push_back(k);
    }
  }

  std::vector<Vertex> vertices_;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::size_t>> adjacency_;
  std::map<std::string, std::size_t> index_;
};

// F(p) = sum over incident edges of a_[p,q] (q - p)/|q - p|.
inline std::vector<cplx> forces(const WeightedNetwork& net) {
  std::vector<cplx> f(net.n(), cplx{});
  for (const auto& e : net.edges()) {
    const cplx d = net.pos(e.v) - net.pos(e.u);
    const double len = std::abs(d);
    if (!(len > 0.0)) throw GeometryError("zero-length edge");
    f[e.u] += e.weight * d / len;
    f[e.v] -= e.weight * d / len;
  }
  return f;
}

inline std::vector<double> lengths(const WeightedNetwork& net) {
  std::vector<double> out;
  out.reserve(net.m());
  for (const auto& e : net.edges()) out.push_back(std::abs(net.pos(e.v) - net.pos(e.u)));
  return out;
}

inline double max_force(const WeightedNetwork& net) {
  double worst = 0.0;
  for (cplx f : forces(net)) worst = std::max(worst, std::abs(f));
  return worst;
}

inline bool is_connected(const WeightedNetwork& net) {
  if (net.n() == 0) return true;
  std::vector<char> seen(net.n(), 0);
  std::vector<std::size_t> stack{0};
  seen[0] = 1;
  std::size_t count = 1;
  while (!stack.empty()) {
    const std::size_t i = stack.back();
    stack.pop_back();
    for (std::size_t k : net.incident(i)) {
      const std::size_t j = net.other(k, i);
      if (!seen[j]) {
        seen[j] = 1;
        ++count;
        stack.push_back(j);
      }
    }
  }
  return count == net.n();
}

inline double bounding_box_diameter(const WeightedNetwork& net) {
  if (net.n() == 0) return 0.0;
  double x0 = net.pos(0).real(), x1 = x0, y0 = net.pos(0).imag(), y1 = y0;
  for (const auto& v : net.vertices()) {
    x0 = std::min(x0, v.pos.real());
    x1 = std::max(x1, v.pos.real());
    y0 = std::min(y0, v.pos.imag());
    y1 = std::max(y1, v.pos.imag());
  }
  return std::hypot(x1 - x0, y1 - y0);
}

// Two distinct edges are disjoint or meet exactly at one shared endpoint.
inline bool is_embedded(const WeightedNetwork& net) {
  const double tol = 1e-12 * std::max(bounding_box_diameter(net), 1e-300);
  const auto& E = net.edges();
  for (std::size_t a = 0; a < E.size(); ++a) {
    for (std::size_t b = a + 1; b < E.size(); ++b) {
      const cplx p0 = net.pos(E[a].u), p1 = net.pos(E[a].v);
      const cplx q0 = net.pos(E[b].u), q1 = net.pos(E[b].v);
      std::size_t shared = 0;
      std::size_t sa = 0;
      for (std::size_t x : {E[a].u, E[a].v})
        for (std::size_t y : {E[b].u, E[b].v})
          if (x == y) {
            ++shared;
            sa = x;
          }
      if (shared == 0) {
        if (segments_intersect(p0, p1, q0, q1, tol)) return false;
        continue;
      }
      // One shared endpoint: the two free endpoints must stay off the other segment.
      const std::size_t fa = E[a].u == sa ? E[a].v : E[a].u;
      const std::size_t fb = E[b].u == sa ? E[b].v : E[b].u;
      if (point_segment_distance(q0, q1, net.pos(fa)) <= tol) return false;
      if (point_segment_distance(p0, p1, net.pos(fb)) <= tol) return false;
    }
  }
  // Vertices lying in the interior of an edge they do not belong to.
  for (std::size_t k = 0; k < E.size(); ++k)
    for (std::size_t i = 0; i < net.n(); ++i) {
      if (i == E[k].u || i == E[k].v) continue;
      if (point_segment_distance(net.pos(E[k].u), net.pos(E[k].v), net.pos(i)) <= tol) return false;
    }
  return true;
}

inline bool is_unitary(const WeightedNetwork& net, double tol) {
  if (!(tol > 0.0)) throw DomainError("is_unitary needs tol > 0");
  for (double l : lengths(net))
    if (std::abs(l - 1.0) > tol) return false;
  return true;
}

}  // namespace netforge
