#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <queue>
#include <sstream>
#include <string>
#include <vector>

#include "netforge/balancer.hpp"
#include "netforge/catalog.hpp"
#include "netforge/linearization.hpp"
#include "netforge/network_io.hpp"

namespace netforge {

// Sub-network replacing one master vertex. anchors maps each master neighbor id
// to the sub-network vertex receiving that edge.
struct SubNetwork {
  WeightedNetwork net;
  std::map<std::string, std::string> anchors;
  std::map<std::string, int> signs;  // optional prescribed signs
};

inline WeightedNetwork singleton_network() { return WeightedNetwork({{"0", cplx{}}}, {}); }

struct SubAssembly {
  WeightedNetwork master;
  std::vector<SubNetwork> subs;  // indexed like master vertices

  const SubNetwork& sub(std::size_t p) const { return subs[p]; }
  // Sub-network vertex index anchoring master edge k on the side of master vertex p.
  std::size_t anchor(std::size_t p, std::size_t k) const {
    const std::string& q = master.vertex(master.other(k, p)).id;
    return subs[p].net.index_of(subs[p].anchors.at(q));
  }
  bool is_singleton(std::size_t p) const { return subs[p].net.n() == 1 && subs[p].net.m() == 0; }
};

// Anchors present for every master edge and pointing at existing vertices.
inline void validate_structure(const SubAssembly& A) {
  if (A.subs.size() != A.master.n()) throw InputError("one sub-network per master vertex required");
  for (std::size_t p = 0; p < A.master.n(); ++p) {
    const SubNetwork& s = A.subs[p];
    const std::string& pid = A.master.vertex(p).id;
    for (std::size_t k : A.master.incident(p)) {
      const std::string& q = A.master.vertex(A.master.other(k, p)).id;
      auto it = s.anchors.find(q);
      if (it == s.anchors.end()) throw InputError("sub-network at '" + pid + "' has no anchor for edge to '" + q + "'");
      if (!s.net.has_vertex(it->second))
        throw InputError("anchor '" + it->second + "' is not a vertex of the sub-network at '" + pid + "'");
    }
    for (const auto& [q, r] : s.anchors) {
      if (!A.master.has_vertex(q) || !A.master.edge_between(p, A.master.index_of(q)))
        throw InputError("sub-network at '" + pid + "' anchors a non-edge to '" + q + "'");
    }
    for (const auto& [r, sg] : s.signs) {
      if (!s.net.has_vertex(r)) throw InputError("sign given for unknown vertex '" + r + "'");
      if (sg != 1 && sg != -1) throw InputError("signs must be +1 or -1");
    }
  }
}

struct ConditionResult {
  bool pass = true;
  std::string detail;
};

struct AssemblyReport {
  std::array<ConditionResult, 7> conditions;  // (i) .. (vii)
  bool subs_unitary = true;
  double ray_clearance = std::numeric_limits<double>::infinity();  // smallest distance probed by (vi)
  std::vector<std::map<std::string, int>> signs;  // solved signs per master vertex
  std::vector<std::string> sign_witness;          // inconsistent cycle as "p:r" labels
  bool all() const {
    return subs_unitary && std::all_of(conditions.begin(), conditions.end(), [](const auto& c) { return c.pass; });
  }
  std::string summary() const {
    static const char* names[7] = {"i", "ii", "iii", "iv", "v", "vi", "vii"};
    std::ostringstream s;
    for (int c = 0; c < 7; ++c)
      if (!conditions[std::size_t(c)].pass) s << "(" << names[c] << ") " << conditions[std::size_t(c)].detail << "; ";
    if (!subs_unitary) s << "sub-network not unitary; ";
    return s.str();
  }
};

struct VerifyOptions {
  double tol = 1e-9;
};

namespace detail {

inline void fail(ConditionResult& c, const std::string& msg) {
  if (c.pass) c.detail = msg;
  c.pass = false;
}

inline std::string fmt(double x) {
  std::ostringstream s;
  s.precision(12);
  s << x;
  return s.str();
}

// Smallest |d + j' v - j u| over integers j, j' >= 1, with a certified search range.
inline std::pair<double, std::pair<long, long>> min_ray_pair(cplx d, cplx u, cplx v) {
  const double c = dot(u, v), s = std::abs(wedge(u, v));
  const double lower = c <= 0.0 ? 1.0 : s;  // |j' v - j u| >= max(j, j') * lower
  double best = std::numeric_limits<double>::infinity();
  std::pair<long, long> arg{0, 0};
  if (lower < 1e-9) {
    // Parallel rays: only k = j' - j matters once j, j' are large.
    const long K = long(std::ceil(std::abs(d) + 2.0));
    for (long k = -K; k <= K; ++k) {
      const double dist = std::abs(d + double(k) * u);
      if (dist < best) {
        best = dist;
        arg = {std::max(1L, 1 - k), std::max(1L, 1 - k) + k};
      }
    }
    return {best, arg};
  }
  const long J = std::min(100000L, long(std::floor((1.0 + std::abs(d)) / lower)) + 1);
  for (long j = 1; j <= J; ++j)
    for (long jp = 1; jp <= J; ++jp) {
      const double dist = std::abs(d + double(jp) * v - double(j) * u);
      if (dist < best) {
        best = dist;
        arg = {j, jp};
      }
    }
  return {best, arg};
}

struct ParityUnionFind {
  std::vector<std::size_t> parent;
  std::vector<int> parity;  // parity to parent
  explicit ParityUnionFind(std::size_t n) : parent(n), parity(n, 0) { std::iota(parent.begin(), parent.end(), 0); }
  std::pair<std::size_t, int> find(std::size_t x) {
    int par = 0;
    std::size_t r = x;
    while (parent[r] != r) {
      par ^= parity[r];
      r = parent[r];
    }
    // path compression with parity update
    std::size_t y = x;
    int py = par;
    while (parent[y] != y) {
      const std::size_t next = parent[y];
      const int pn = py ^ parity[y];
      parent[y] = r;
      parity[y] = py;
      y = next;
      py = pn;
    }
    return {r, par};
  }
  // false when the constraint contradicts earlier ones
  bool unite(std::size_t a, std::size_t b, int par) {
    auto [ra, pa] = find(a);
    auto [rb, pb] = find(b);
    if (ra == rb) return (pa ^ pb) == par;
    parent[ra] = rb;
    parity[ra] = pa ^ pb ^ par;
    return true;
  }
};

// Conditions (i)-(vi) at master vertex p.
inline void check_vertex(const SubAssembly& A, std::size_t p, double tol, AssemblyReport& rep) {
  const WeightedNetwork& M = A.master;
  const WeightedNetwork& S = A.subs[p].net;
  const std::string& pid = M.vertex(p).id;
  const double scale = std::max(1.0, S.diameter());
  // (i)
  cplx bary{};
  for (const auto& v : S.vertices()) bary += v.pos;
  if (std::abs(bary) > tol * scale * double(S.n()))
    fail(rep.conditions[0], "barycenter of '" + pid + "' is " + fmt(std::abs(bary)));
  if (S.m() > 0 && !is_unitary(S, tol)) rep.subs_unitary = false;

  // Rays: anchor position and master direction.
  struct Ray {
    std::size_t r;
    cplx u;
    std::string q;
  };
  std::vector<Ray> rays;
  for (std::size_t k : M.incident(p)) {
    const std::size_t q = M.other(k, p);
    rays.push_back({A.anchor(p, k), unit(M.pos(q) - M.pos(p)), M.vertex(q).id});
  }
  // (ii) edges of the sub-network, plus rays, pairwise disjoint or meeting at endpoints.
  const double gtol = 1e-12 * scale;
  if (!is_embedded(S)) fail(rep.conditions[1], "sub-network at '" + pid + "' is not embedded");
  for (std::size_t a = 0; a < rays.size(); ++a) {
    const cplx ra = S.pos(rays[a].r);
    for (const auto& e : S.edges()) {
      const cplx c = S.pos(e.u), d = S.pos(e.v);
      if (e.u == rays[a].r || e.v == rays[a].r) {
        const cplx w = unit((e.u == rays[a].r ? d : c) - ra);
        if (std::abs(wedge(rays[a].u, w)) <= 1e-12 && dot(rays[a].u, w) > 0.0)
          fail(rep.conditions[1], "ray to '" + rays[a].q + "' runs along a sub-network edge at '" + pid + "'");
        continue;
      }
      if (segment_ray_distance(ra, rays[a].u, c, d, gtol) <= gtol)
        fail(rep.conditions[1], "ray to '" + rays[a].q + "' meets a sub-network edge at '" + pid + "'");
    }
    for (std::size_t b = a + 1; b < rays.size(); ++b) {
      const cplx rb = S.pos(rays[b].r);
      if (rays[a].r == rays[b].r) {
        if (std::abs(wedge(rays[a].u, rays[b].u)) <= 1e-12 && dot(rays[a].u, rays[b].u) > 0.0)
          fail(rep.conditions[1], "two rays overlap at '" + pid + "'");
        continue;
      }
      if (ray_ray_distance(ra, rays[a].u, rb, rays[b].u, gtol) <= gtol)
        fail(rep.conditions[1], "rays to '" + rays[a].q + "' and '" + rays[b].q + "' meet at '" + pid + "'");
    }
  }
  // (iii), (iv)
  const auto F = forces(S);
  const double ftol = tol * std::max(1.0, S.weight_l1() + M.weight_l1());
  for (std::size_t r = 0; r < S.n(); ++r) {
    cplx total = F[r];
    bool external = false;
    for (std::size_t k : M.incident(p)) {
      if (A.anchor(p, k) != r) continue;
      external = true;
      total += M.edge(k).weight * unit(M.pos(M.other(k, p)) - M.pos(p));
    }
    if (std::abs(total) > ftol) {
      const std::string msg = "force " + fmt(std::abs(total)) + " at '" + pid + ":" + S.vertex(r).id + "'";
      fail(rep.conditions[external ? 3 : 2], msg);
    }
  }
  // (v)
  for (std::size_t r = 0; r < S.n(); ++r)
    for (std::size_t s = r + 1; s < S.n(); ++s) {
      const double d = std::abs(S.pos(s) - S.pos(r));
      if (d <= 1.0 + tol && (!S.edge_between(r, s) || std::abs(d - 1.0) > tol))
        fail(rep.conditions[4], "vertices '" + S.vertex(r).id + "', '" + S.vertex(s).id + "' at '" + pid +
                                            "' are at distance " + fmt(d));
    }
  // (vi)
  const long J = long(std::ceil(S.diameter() + 2.0));
  for (const Ray& ray : rays) {
    const cplx r0 = S.pos(ray.r);
    for (std::size_t rp = 0; rp < S.n(); ++rp) {
      if (rp == ray.r) continue;
      for (long j = 1; j <= J; ++j) {
        const double d = std::abs(S.pos(rp) - r0 - double(j) * ray.u);
        rep.ray_clearance = std::min(rep.ray_clearance, d);
        if (!(d > 1.0 + tol))
          fail(rep.conditions[5], "ray to '" + ray.q + "' at '" + pid + "': vertex '" + S.vertex(rp).id +
                                              "' at distance " + fmt(d) + " from point j=" + std::to_string(j));
      }
    }
  }
  for (std::size_t a = 0; a < rays.size(); ++a)
    for (std::size_t b = a + 1; b < rays.size(); ++b) {
      const cplx d = S.pos(rays[b].r) - S.pos(rays[a].r);
      const auto [dist, jj] = min_ray_pair(d, rays[a].u, rays[b].u);
      rep.ray_clearance = std::min(rep.ray_clearance, dist);
      if (!(dist > 1.0 + tol))
        fail(rep.conditions[5], "rays to '" + rays[a].q + "' and '" + rays[b].q + "' at '" + pid +
                                            "': points j=" + std::to_string(jj.first) + ", j'=" +
                                            std::to_string(jj.second) + " at distance " + fmt(dist));
    }
}

}  // namespace detail

inline AssemblyReport verify_assembly(const SubAssembly& A, const VerifyOptions& opt = {}) {
  validate_structure(A);
  AssemblyReport rep;
  const WeightedNetwork& M = A.master;
  const double tol = opt.tol;
  for (std::size_t p = 0; p < M.n(); ++p) detail::check_vertex(A, p, tol, rep);

  // (vii) parity constraints over all sub-network vertices.
  std::vector<std::size_t> offset(M.n() + 1, 0);
  for (std::size_t p = 0; p < M.n(); ++p) offset[p + 1] = offset[p] + A.subs[p].net.n();
  const std::size_t N = offset.back(), root = N;  // extra node carrying sign +1
  detail::ParityUnionFind uf(N + 1);
  struct Link {
    std::size_t a, b;
    int par;
  };
  std::vector<Link> accepted;
  auto label = [&](std::size_t x) {
    if (x == root) return std::string("+1");
    const std::size_t p = std::size_t(std::upper_bound(offset.begin(), offset.end(), x) - offset.begin()) - 1;
    return M.vertex(p).id + ":" + A.subs[p].net.vertex(x - offset[p]).id;
  };
  auto add = [&](std::size_t a, std::size_t b, int par) {
    if (uf.unite(a, b, par)) {
      accepted.push_back({a, b, par});
      return;
    }
    if (!rep.conditions[6].pass) return;
    // Witness: path a -> b in the accepted forest, closed by the failing link.
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adj(N + 1);
    for (std::size_t i = 0; i < accepted.size(); ++i) {
      adj[accepted[i].a].push_back({accepted[i].b, i});
      adj[accepted[i].b].push_back({accepted[i].a, i});
    }
    std::vector<long> prev(N + 1, -1);
    std::vector<char> seen(N + 1, 0);
    std::queue<std::size_t> qu;
    qu.push(a);
    seen[a] = 1;
    while (!qu.empty()) {
      const std::size_t x = qu.front();
      qu.pop();
      if (x == b) break;
      for (auto [y, i] : adj[x])
        if (!seen[y]) {
          seen[y] = 1;
          prev[y] = long(x);
          qu.push(y);
        }
    }
    std::vector<std::string> cyc;
    for (long x = long(b); x != -1; x = prev[std::size_t(x)]) cyc.push_back(label(std::size_t(x)));
    std::reverse(cyc.begin(), cyc.end());
    cyc.push_back(label(b) == cyc.front() ? label(a) : cyc.front());
    rep.sign_witness = cyc;
    detail::fail(rep.conditions[6], "inconsistent sign cycle through " + std::to_string(cyc.size() - 1) + " vertices");
  };
  for (std::size_t p = 0; p < M.n(); ++p) {
    const WeightedNetwork& S = A.subs[p].net;
    for (const auto& e : S.edges()) add(offset[p] + e.u, offset[p] + e.v, e.weight < 0.0 ? 1 : 0);
    for (const auto& [r, sg] : A.subs[p].signs) add(offset[p] + S.index_of(r), root, sg < 0 ? 1 : 0);
  }
  for (std::size_t k = 0; k < M.m(); ++k) {
    const std::size_t p = M.edge(k).u, q = M.edge(k).v;
    add(offset[p] + A.anchor(p, k), offset[q] + A.anchor(q, k), 0);
  }
  rep.signs.resize(M.n());
  if (rep.conditions[6].pass) {
    for (std::size_t p = 0; p < M.n(); ++p)
      for (std::size_t r = 0; r < A.subs[p].net.n(); ++r) {
        const auto [rt, par] = uf.find(offset[p] + r);
        const auto [rr, rpar] = uf.find(root);
        const int rel = rt == rr ? par ^ rpar : par;
        rep.signs[p][A.subs[p].net.vertex(r).id] = rel ? -1 : 1;
      }
  }
  return rep;
}

// ---- JSON ----

inline std::string anchor_key(const std::string& p, const std::string& q) { return p + "->" + q; }

inline json assembly_to_json(const SubAssembly& A) {
  json out = network_to_json(A.master);
  json sub = json::object();
  for (std::size_t p = 0; p < A.master.n(); ++p) {
    const std::string& pid = A.master.vertex(p).id;
    json entry;
    entry["network"] = network_to_json(A.subs[p].net);
    json anchors = json::object();
    for (const auto& [q, r] : A.subs[p].anchors) anchors[anchor_key(pid, q)] = r;
    entry["anchors"] = anchors;
    if (!A.subs[p].signs.empty()) entry["signs"] = A.subs[p].signs;
    sub[pid] = entry;
  }
  out["subassembly"] = sub;
  return out;
}

inline SubAssembly assembly_from_json(const json& j) {
  SubAssembly A{network_from_json(j), {}};
  A.subs.resize(A.master.n(), SubNetwork{singleton_network(), {}, {}});
  for (std::size_t p = 0; p < A.master.n(); ++p)
    for (std::size_t k : A.master.incident(p)) A.subs[p].anchors[A.master.vertex(A.master.other(k, p)).id] = "0";
  if (!j.contains("subassembly")) return A;
  const json& sub = j["subassembly"];
  if (!sub.is_object()) throw InputError("'subassembly' must be an object");
  for (auto it = sub.begin(); it != sub.end(); ++it) {
    if (!A.master.has_vertex(it.key())) throw InputError("subassembly for unknown vertex '" + it.key() + "'");
    const std::size_t p = A.master.index_of(it.key());
    const json& e = it.value();
    if (!e.is_object() || !e.contains("network")) throw InputError("subassembly entries need a 'network'");
    SubNetwork s{network_from_json(e["network"]), {}, {}};
    if (e.contains("anchors")) {
      if (!e["anchors"].is_object()) throw InputError("'anchors' must be an object");
      for (auto a = e["anchors"].begin(); a != e["anchors"].end(); ++a) {
        std::string key = a.key();
        for (const std::string sep : {"->", "→"}) {
          const auto pos = key.find(sep);
          if (pos != std::string::npos) {
            if (key.substr(0, pos) != it.key()) throw InputError("anchor key '" + a.key() + "' does not start at its vertex");
            key = key.substr(pos + sep.size());
            break;
          }
        }
        s.anchors[key] = id_string(a.value(), "anchor");
      }
    } else if (s.net.n() == 1) {
      for (std::size_t k : A.master.incident(p)) s.anchors[A.master.vertex(A.master.other(k, p)).id] = s.net.vertex(0).id;
    }
    if (e.contains("signs")) {
      if (!e["signs"].is_object()) throw InputError("'signs' must be an object");
      for (auto sg = e["signs"].begin(); sg != e["signs"].end(); ++sg) {
        if (!sg.value().is_number_integer()) throw InputError("signs must be integers");
        s.signs[sg.key()] = sg.value().get<int>();
      }
    }
    A.subs[p] = std::move(s);
  }
  validate_structure(A);
  return A;
}

// ---- catalog assemblies ----

inline SubNetwork singleton_sub(const WeightedNetwork& master, std::size_t p) {
  SubNetwork s{singleton_network(), {}, {}};
  for (std::size_t k : master.incident(p)) s.anchors[master.vertex(master.other(k, p)).id] = "0";
  return s;
}

// Polygon with center, spokes 2 sin(pi/k), ring -1; unit k-gon at the center, singletons elsewhere.
inline SubAssembly example_5_1(std::size_t k) {
  if (k < 3) throw InputError("example 5.1 needs k >= 3");
  const WeightedNetwork master = polygon_center(k, -1.0, 2.0 * std::sin(kPi / double(k)));
  SubAssembly A{master, {}};
  for (std::size_t p = 0; p < master.n(); ++p) A.subs.push_back(singleton_sub(master, p));
  SubNetwork center{regular_polygon(k), {}, {}};
  for (std::size_t j = 0; j < k; ++j) center.anchors[indexed_id("p", j)] = indexed_id("z", j);
  A.subs[master.index_of("o")] = center;
  return A;
}

// Rotated triangle sub-network with vertex i anchoring the edge to targets[i].
inline SubNetwork triangle_sub(double theta, const std::array<double, 3>& w, const std::array<std::string, 3>& targets) {
  SubNetwork s{triangle_network(theta, w[0], w[1], w[2]), {}, {}};
  for (int i = 0; i < 3; ++i) s.anchors[targets[std::size_t(i)]] = indexed_id("t", std::size_t(i));
  return s;
}

// Polygon with center (ring 1, spokes -2 sin(pi/k)); singleton at the center, triangles
// at the outer vertices with the vertex facing the center anchoring the spoke.
inline SubAssembly example_5_2(std::size_t k) {
  if (k < 3) throw InputError("example 5.2 needs k >= 3");
  const WeightedNetwork master = polygon_center(k);
  const double s = std::sin(kPi / double(k)), c = std::cos(kPi / double(k));
  const double side = -2.0 / std::sqrt(3.0) * s, base = c + s / std::sqrt(3.0);
  SubAssembly A{master, {}};
  for (std::size_t p = 0; p < master.n(); ++p) A.subs.push_back(singleton_sub(master, p));
  for (std::size_t j = 0; j < k; ++j) {
    const std::string prev = indexed_id("p", (j + k - 1) % k), next = indexed_id("p", (j + 1) % k);
    const double theta = kPi + 2.0 * kPi * double(j) / double(k);
    A.subs[master.index_of(indexed_id("p", j))] = triangle_sub(theta, {side, base, side}, {"o", prev, next});
  }
  return A;
}

namespace detail {

inline bool local_ok(const WeightedNetwork& master, std::size_t p, const SubNetwork& s) {
  SubAssembly probe{master, {}};
  for (std::size_t v = 0; v < master.n(); ++v) probe.subs.push_back(singleton_sub(master, v));
  probe.subs[p] = s;
  AssemblyReport r;
  check_vertex(probe, p, VerifyOptions{}.tol, r);
  return r.all();
}

// Singletons where they satisfy the local conditions, realized triangles at the
// remaining degree-3 vertices; all triangle variants are tried until (i)-(vii) hold.
inline SubAssembly triangle_assembly(const WeightedNetwork& master) {
  SubAssembly A{master, {}};
  std::vector<std::size_t> tri;
  for (std::size_t p = 0; p < master.n(); ++p) {
    A.subs.push_back(singleton_sub(master, p));
    if (!local_ok(master, p, A.subs[p])) {
      if (master.incident(p).size() != 3)
        throw DomainError("vertex '" + master.vertex(p).id + "' needs a sub-network other than a singleton or triangle");
      tri.push_back(p);
    }
  }
  std::vector<std::vector<SubNetwork>> options(tri.size());
  for (std::size_t t = 0; t < tri.size(); ++t) {
    const std::size_t p = tri[t];
    const auto& inc = master.incident(p);
    std::array<std::size_t, 3> order{inc[0], inc[1], inc[2]};
    for (int flip = 0; flip < 2; ++flip) {
      if (flip) std::swap(order[1], order[2]);
      std::array<cplx, 3> f;
      std::array<std::string, 3> targets;
      for (int i = 0; i < 3; ++i) {
        const std::size_t k = order[std::size_t(i)], q = master.other(k, p);
        f[std::size_t(i)] = -master.edge(k).weight * unit(master.pos(q) - master.pos(p));
        targets[std::size_t(i)] = master.vertex(q).id;
      }
      TriangleRealization tr;
      try {
        tr = realize_triangle(f[0], f[1], f[2]);
      } catch (const Error&) {
        continue;
      }
      for (int sgn : {1, -1}) {
        const double theta = tr.theta + (sgn < 0 ? kPi : 0.0);
        const std::array<double, 3> w{sgn * tr.weights[0], sgn * tr.weights[1], sgn * tr.weights[2]};
        if (std::abs(w[0] + w[1] + w[2]) < 1e-9) continue;  // not flexible
        SubNetwork s = triangle_sub(theta, w, targets);
        if (local_ok(master, p, s)) options[t].push_back(s);
      }
    }
    if (options[t].empty())
      throw DomainError("no admissible triangle sub-network at '" + master.vertex(p).id + "'");
  }
  std::vector<std::size_t> pick(tri.size(), 0);
  while (true) {
    for (std::size_t t = 0; t < tri.size(); ++t) A.subs[tri[t]] = options[t][pick[t]];
    if (verify_assembly(A).all()) return A;
    std::size_t t = 0;
    while (t < tri.size() && ++pick[t] == options[t].size()) pick[t++] = 0;
    if (t == tri.size()) break;
  }
  throw DomainError("no combination of triangle sub-networks satisfies (i)-(vii)");
}

}  // namespace detail

// Center singleton, triangles at the four outer vertices.
inline SubAssembly nv_assembly(double theta) { return detail::triangle_assembly(network_nv(theta)); }

// N_C with its center moved by `shift` and re-balanced, then assembled.
inline SubAssembly nc_assembly(double a, double b, cplx shift = {}) {
  WeightedNetwork master = network_nc(a, b);
  if (shift != cplx{}) {
    std::vector<cplx> phi = master.positions();
    phi[master.index_of("c")] += shift;
    const PerturbationResult r = balance_nearby(master, phi);
    master = master.with_positions(r.phi).with_weights(r.a_tilde);
  }
  return detail::triangle_assembly(master);
}

inline std::vector<std::string> assembly_catalog_names() { return {"example_5_1", "example_5_2", "N_V", "N_C"}; }

inline SubAssembly assembly_catalog(const std::string& name, const CatalogParams& p) {
  if (name == "example_5_1") return example_5_1(std::size_t(p.k.value_or(7)));
  if (name == "example_5_2") return example_5_2(std::size_t(p.k.value_or(4)));
  if (name == "N_V") return nv_assembly(p.theta.value_or(kPi / 5.0));
  if (name == "N_C") {
    const double a = p.a.value_or(0.02), b = p.b.value_or(0.05);
    return nc_assembly(a, b, 0.01 * polar_unit(0.7));
  }
  throw InputError("unknown assembly '" + name + "'");
}

}  // namespace netforge
