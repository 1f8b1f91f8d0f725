#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "netforge/assembly.hpp"
#include "netforge/balancer.hpp"
#include "netforge/interaction.hpp"
#include "netforge/newton.hpp"

namespace netforge {

// Smallest m with 2m >= x (2m = x allowed).
inline long quantize_length(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("quantize_length needs a positive finite length");
  return long(std::ceil(x / 2.0));
}

inline std::vector<long> quantize(const SubAssembly& A, double kappa, double ell, const InteractionTable& table) {
  if (!(kappa > 0.0) || !(ell > 0.0)) throw DomainError("kappa and ell must be positive");
  std::vector<long> m;
  for (const auto& e : A.master.edges()) {
    const double len = std::abs(A.master.pos(e.v) - A.master.pos(e.u));
    m.push_back(quantize_length(kappa * len / (1.0 - table.alpha(e.weight, ell))));
  }
  return m;
}

// Prescribed forces f^p_r, indexed [master vertex][sub-network vertex].
using SubForces = std::vector<std::vector<cplx>>;

inline SubForces zero_forces(const SubAssembly& A) {
  SubForces f(A.master.n());
  for (std::size_t p = 0; p < A.master.n(); ++p) f[p].assign(A.subs[p].net.n(), cplx{});
  return f;
}

struct MasterSolveOptions {
  double tol = 1e-10;
  int max_iter = 60;
  bool infinite_kappa = false;  // master frozen, one free e per vertex
  double initial_step = 1.0;     // continuation step in the homotopy parameter
  double min_step = 1e-4;
};

struct MasterSolveResult {
  SubAssembly assembly;
  double kappa = 0.0, ell = 0.0;
  bool infinite_kappa = false;
  std::vector<long> m_map;
  std::vector<cplx> phi;
  std::vector<double> a_tilde;
  std::vector<std::vector<cplx>> sub_phi;
  std::vector<std::vector<double>> sub_a;
  SubForces f;
  cplx e{};
  double t = 0.0;
  std::vector<cplx> e_local;          // per-vertex e in the frozen-master mode
  std::array<double, 6> residuals{};  // (a) .. (f)
  int iterations = 0;
  int continuation_steps = 0;
  // Projections of the master update on the dilation directions.
  double position_dilation = 0.0, weight_dilation = 0.0;
  std::vector<std::map<std::string, int>> signs;

  double max_residual() const { return *std::max_element(residuals.begin(), residuals.end()); }
  SubNetwork sub(std::size_t p) const {
    SubNetwork s = assembly.subs[p];
    s.net = s.net.with_positions(sub_phi[p]).with_weights(sub_a[p]);
    return s;
  }
  WeightedNetwork master() const { return assembly.master.with_positions(phi).with_weights(a_tilde); }
};

namespace detail {

struct MasterLayout {
  Eigen::Index n = 0, m = 0;
  std::vector<Eigen::Index> sub_pos, sub_w;  // offsets per master vertex
  Eigen::Index e = 0, t = 0, size = 0;
  bool frozen = false;

  MasterLayout(const SubAssembly& A, bool frozen_master) : frozen(frozen_master) {
    n = Eigen::Index(A.master.n());
    m = Eigen::Index(A.master.m());
    Eigen::Index k = frozen ? 0 : 2 * n + m;
    for (const auto& s : A.subs) {
      sub_pos.push_back(k);
      k += 2 * Eigen::Index(s.net.n());
      sub_w.push_back(k);
      k += Eigen::Index(s.net.m());
    }
    e = k;
    t = k + (frozen ? 2 * n : 2);
    size = frozen ? t : t + 1;
  }
};

struct MasterState {
  std::vector<cplx> phi;
  std::vector<double> a;
  std::vector<std::vector<cplx>> sub_phi;
  std::vector<std::vector<double>> sub_a;
  std::vector<cplx> e;  // one entry, or one per vertex when frozen
  double t = 0.0;
};

inline MasterState unpack_master(const SubAssembly& A, const MasterLayout& L, const Eigen::VectorXd& x) {
  MasterState s;
  if (L.frozen) {
    s.phi = A.master.positions();
    s.a = A.master.weights();
  } else {
    for (Eigen::Index i = 0; i < L.n; ++i) s.phi.push_back(get(x, 2 * i));
    for (Eigen::Index k = 0; k < L.m; ++k) s.a.push_back(x(2 * L.n + k));
  }
  for (std::size_t p = 0; p < A.subs.size(); ++p) {
    std::vector<cplx> ph;
    std::vector<double> w;
    for (std::size_t r = 0; r < A.subs[p].net.n(); ++r) ph.push_back(get(x, L.sub_pos[p] + 2 * Eigen::Index(r)));
    for (std::size_t k = 0; k < A.subs[p].net.m(); ++k) w.push_back(x(L.sub_w[p] + Eigen::Index(k)));
    s.sub_phi.push_back(ph);
    s.sub_a.push_back(w);
  }
  if (L.frozen)
    for (Eigen::Index i = 0; i < L.n; ++i) s.e.push_back(get(x, L.e + 2 * i));
  else {
    s.e.push_back(get(x, L.e));
    s.t = x(L.t);
  }
  return s;
}

inline Eigen::VectorXd pack_initial(const SubAssembly& A, const MasterLayout& L) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(L.size);
  if (!L.frozen) {
    for (Eigen::Index i = 0; i < L.n; ++i) put(x, 2 * i, A.master.pos(std::size_t(i)));
    for (Eigen::Index k = 0; k < L.m; ++k) x(2 * L.n + k) = A.master.edge(std::size_t(k)).weight;
  }
  for (std::size_t p = 0; p < A.subs.size(); ++p) {
    const WeightedNetwork& S = A.subs[p].net;
    for (std::size_t r = 0; r < S.n(); ++r) put(x, L.sub_pos[p] + 2 * Eigen::Index(r), S.pos(r));
    for (std::size_t k = 0; k < S.m(); ++k) x(L.sub_w[p] + Eigen::Index(k)) = S.edge(k).weight;
  }
  return x;
}

// Equations (a)-(f) in a fixed order; `groups` receives the condition index of each row.
inline Eigen::VectorXd master_equations(const SubAssembly& A, const MasterState& s, const std::vector<long>& m_map,
                                        const SubForces& f, double kappa, double ell, const InteractionTable& table,
                                        bool frozen, std::vector<int>* groups = nullptr) {
  const WeightedNetwork& M = A.master;
  std::vector<double> out;
  auto emit = [&](double v, int g) {
    out.push_back(v);
    if (groups) groups->push_back(g);
  };
  // (a)
  for (std::size_t p = 0; p < M.n(); ++p) {
    const WeightedNetwork& S = A.subs[p].net;
    for (std::size_t k = 0; k < S.m(); ++k) {
      const Edge& e = S.edge(k);
      emit(std::abs(s.sub_phi[p][e.v] - s.sub_phi[p][e.u]) - (1.0 - table.alpha(s.sub_a[p][k], ell)), 0);
    }
  }
  // Anchor-to-anchor vectors (kappa q + r^q_p) - (kappa p + r^p_q).
  std::vector<cplx> chord(M.m());
  for (std::size_t k = 0; k < M.m(); ++k) {
    const std::size_t p = M.edge(k).u, q = M.edge(k).v;
    chord[k] = (kappa * s.phi[q] + s.sub_phi[q][A.anchor(q, k)]) - (kappa * s.phi[p] + s.sub_phi[p][A.anchor(p, k)]);
  }
  // (b)
  if (!frozen)
    for (std::size_t k = 0; k < M.m(); ++k)
      emit(std::abs(chord[k]) - 2.0 * double(m_map[k]) * (1.0 - table.alpha(s.a[k], ell)), 1);
  // (c), (d)
  for (std::size_t p = 0; p < M.n(); ++p) {
    const WeightedNetwork& S = A.subs[p].net;
    std::vector<cplx> F(S.n());
    for (std::size_t k = 0; k < S.m(); ++k) {
      const Edge& e = S.edge(k);
      const cplx u = unit(s.sub_phi[p][e.v] - s.sub_phi[p][e.u]);
      F[e.u] += s.sub_a[p][k] * u;
      F[e.v] -= s.sub_a[p][k] * u;
    }
    std::vector<char> external(S.n(), 0);
    for (std::size_t k : M.incident(p)) {
      const std::size_t r = A.anchor(p, k);
      external[r] = 1;
      const cplx dir = M.edge(k).u == p ? unit(chord[k]) : -unit(chord[k]);
      F[r] += (frozen ? M.edge(k).weight * unit(M.pos(M.other(k, p)) - M.pos(p)) : s.a[k] * dir);
    }
    const double np = double(S.n());
    const cplx shift = frozen ? s.e[p] / np : (s.e[0] + cplx(0.0, s.t) * M.pos(p)) / np;
    for (std::size_t r = 0; r < S.n(); ++r) {
      const cplx res = F[r] - f[p][r] - shift;
      emit(res.real(), external[r] ? 3 : 2);
      emit(res.imag(), external[r] ? 3 : 2);
    }
  }
  // (e)
  for (std::size_t p = 0; p < M.n(); ++p) {
    cplx sum{};
    for (cplx z : s.sub_phi[p]) sum += z;
    emit(sum.real(), 4);
    emit(sum.imag(), 4);
  }
  // (f)
  if (!frozen) {
    cplx sum{};
    double w = 0.0;
    for (std::size_t p = 0; p < M.n(); ++p) {
      sum += s.phi[p] - M.pos(p);
      w += wedge(s.phi[p] - M.pos(p), s.phi[p]);
    }
    emit(sum.real(), 5);
    emit(sum.imag(), 5);
    emit(w, 5);
  }
  return Eigen::Map<Eigen::VectorXd>(out.data(), Eigen::Index(out.size()));
}

}  // namespace detail

// Residuals of (a)-(f) for a given solution, recomputed from scratch.
inline std::array<double, 6> master_condition_residuals(const MasterSolveResult& r, const InteractionTable& table) {
  detail::MasterState s{r.phi, r.a_tilde, r.sub_phi, r.sub_a, {}, r.t};
  s.e = r.infinite_kappa ? r.e_local : std::vector<cplx>{r.e};
  std::vector<int> g;
  const Eigen::VectorXd v =
      detail::master_equations(r.assembly, s, r.m_map, r.f, r.kappa, r.ell, table, r.infinite_kappa, &g);
  std::array<double, 6> out{};
  for (Eigen::Index i = 0; i < v.size(); ++i) out[std::size_t(g[std::size_t(i)])] = std::max(out[std::size_t(g[std::size_t(i)])], std::abs(v(i)));
  return out;
}

// Checks the structural hypotheses of the master solve; throws DomainError with the reason.
inline AssemblyReport check_master_preconditions(const SubAssembly& A) {
  const AssemblyReport rep = verify_assembly(A);
  if (!rep.all()) throw DomainError("assembly conditions fail: " + rep.summary());
  const Certificate c = certify(A.master);
  if (!(c.balanced && c.flexible && c.closable))
    throw DomainError("master network must be balanced, flexible and closable");
  for (std::size_t p = 0; p < A.master.n(); ++p) {
    if (A.is_singleton(p)) continue;
    const Certificate cs = certify(A.subs[p].net);
    if (cs.balanced || !cs.flexible)
      throw DomainError("sub-network at '" + A.master.vertex(p).id + "' must be unbalanced and flexible");
  }
  return rep;
}

inline MasterSolveResult solve_master(const SubAssembly& A, double kappa, double ell, const SubForces& f,
                                      const InteractionTable& table, const MasterSolveOptions& opt = {}) {
  const AssemblyReport rep = check_master_preconditions(A);
  if (!(ell > 0.0) || !(kappa > 0.0)) throw DomainError("kappa and ell must be positive");
  if (f.size() != A.master.n()) throw InputError("forces must be given for every master vertex");
  for (std::size_t p = 0; p < f.size(); ++p)
    if (f[p].size() != A.subs[p].net.n()) throw InputError("forces must be given for every sub-network vertex");

  MasterSolveResult res;
  res.assembly = A;
  res.kappa = kappa;
  res.ell = ell;
  res.f = f;
  res.infinite_kappa = opt.infinite_kappa;
  res.signs = rep.signs;
  if (!opt.infinite_kappa) res.m_map = quantize(A, kappa, ell, table);

  const detail::MasterLayout L(A, opt.infinite_kappa);
  auto G = [&](const Eigen::VectorXd& x) {
    const detail::MasterState s = detail::unpack_master(A, L, x);
    return detail::master_equations(A, s, res.m_map, f, kappa, ell, table, opt.infinite_kappa);
  };
  // Newton homotopy G(x) - (1 - h) G(x0): h = 0 is solved by the unperturbed assembly.
  const Eigen::VectorXd x0 = detail::pack_initial(A, L), g0 = G(x0);
  auto system = [&](double h) {
    return [&, h](const Eigen::VectorXd& x) -> Eigen::VectorXd { return G(x) - (1.0 - h) * g0; };
  };
  NewtonOptions no;
  no.tol = opt.tol;
  no.max_iter = opt.max_iter;
  // Continuation from the unperturbed assembly; steps shrink on failure and grow on success.
  // Weights keep their signs, so the sign rule of the assembly stays valid.
  auto admissible = [&](const Eigen::VectorXd& x) {
    const detail::MasterState s = detail::unpack_master(A, L, x);
    for (std::size_t k = 0; k < A.master.m(); ++k)
      if (s.a[k] * A.master.edge(k).weight <= 0.0) return false;
    for (std::size_t p = 0; p < A.subs.size(); ++p)
      for (std::size_t k = 0; k < A.subs[p].net.m(); ++k)
        if (s.sub_a[p][k] * A.subs[p].net.edge(k).weight <= 0.0) return false;
    return true;
  };
  Eigen::VectorXd x = x0;
  double h = 0.0, step = opt.initial_step;
  NewtonResult nr;
  int total_iter = 0;
  while (true) {
    const double target = std::min(1.0, h + step);
    NewtonOptions trial = no;
    if (target < 1.0) trial.tol = std::max(opt.tol, 1e-8);
    nr = damped_newton(system(target), nullptr, x, trial);
    total_iter += nr.iterations;
    if (nr.converged && !admissible(nr.x)) {
      nr.converged = false;
      nr.message = "weights left their sign class";
    }
    if (nr.converged) {
      x = nr.x;
      h = target;
      ++res.continuation_steps;
      if (h >= 1.0) break;
      if (nr.iterations <= 4) step *= 1.5;
    } else {
      step *= 0.5;
      if (step < opt.min_step) break;
    }
  }
  if (!nr.converged) {
    std::vector<int> groups;
    const detail::MasterState s = detail::unpack_master(A, L, nr.x);
    detail::master_equations(A, s, res.m_map, f, kappa, ell, table, opt.infinite_kappa, &groups);
    static const char* names[6] = {"a", "b", "c", "d", "e", "f"};
    const std::string which =
        nr.worst_equation >= 0 ? names[groups[std::size_t(nr.worst_equation)]] : std::string("?");
    throw SolverError("master solve did not converge (" + nr.message + ", continuation stalled at " +
                      std::to_string(h) + "); worst equation in condition (" + which + "), residual " +
                      std::to_string(nr.residual));
  }
  // Polish to the round-off floor; chain spacing errors scale with ell times the (b) residual.
  NewtonOptions polish = no;
  polish.tol = 0.0;
  polish.max_iter = 3;
  const NewtonResult pr = damped_newton(system(1.0), nullptr, nr.x, polish);
  if (pr.residual < nr.residual && admissible(pr.x)) nr = pr;
  const detail::MasterState s = detail::unpack_master(A, L, nr.x);
  res.phi = s.phi;
  res.a_tilde = s.a;
  res.sub_phi = s.sub_phi;
  res.sub_a = s.sub_a;
  if (opt.infinite_kappa)
    res.e_local = s.e;
  else {
    res.e = s.e[0];
    res.t = s.t;
  }
  res.iterations = total_iter;
  res.residuals = master_condition_residuals(res, table);

  double num = 0.0, den = 0.0;
  for (std::size_t p = 0; p < A.master.n(); ++p) {
    num += dot(res.phi[p] - A.master.pos(p), A.master.pos(p));
    den += std::norm(A.master.pos(p));
  }
  res.position_dilation = den > 0.0 ? num / den : 0.0;
  num = den = 0.0;
  for (std::size_t k = 0; k < A.master.m(); ++k) {
    const double a = A.master.edge(k).weight;
    num += (res.a_tilde[k] - a) * a;
    den += a * a;
  }
  res.weight_dilation = den > 0.0 ? num / den : 0.0;
  return res;
}

struct KappaCandidate {
  double kappa = 0.0;
  double predicted_weight_change = 0.0;  // max relative weight change of one Newton step
};

// Scores kappa values by the first Newton step from the unperturbed assembly and
// returns them best first. Small scores mark quantizations the closable direction absorbs cheaply.
inline std::vector<KappaCandidate> scan_kappa(const SubAssembly& A, double ell, const SubForces& f,
                                              const InteractionTable& table, double lo, double hi, double step) {
  if (!(lo > 0.0) || !(hi >= lo) || !(step > 0.0)) throw DomainError("invalid kappa range");
  check_master_preconditions(A);
  const detail::MasterLayout L(A, false);
  const Eigen::VectorXd x0 = detail::pack_initial(A, L);
  std::vector<KappaCandidate> out;
  for (double kappa = lo; kappa <= hi + 1e-9; kappa += step) {
    const std::vector<long> m_map = quantize(A, kappa, ell, table);
    auto G = [&](const Eigen::VectorXd& x) {
      return detail::master_equations(A, detail::unpack_master(A, L, x), m_map, f, kappa, ell, table, false);
    };
    const Eigen::MatrixXd J = fd_jacobian(G, x0, 1e-7);
    const Eigen::VectorXd dx = J.fullPivLu().solve(-G(x0));
    double score = 0.0;
    for (Eigen::Index k = 0; k < L.m; ++k) score = std::max(score, std::abs(dx(2 * L.n + k) / x0(2 * L.n + k)));
    for (std::size_t p = 0; p < A.subs.size(); ++p)
      for (std::size_t k = 0; k < A.subs[p].net.m(); ++k) {
        const Eigen::Index i = L.sub_w[p] + Eigen::Index(k);
        score = std::max(score, std::abs(dx(i) / x0(i)));
      }
    out.push_back({kappa, std::isfinite(score) ? score : std::numeric_limits<double>::infinity()});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const KappaCandidate& a, const KappaCandidate& b) { return a.predicted_weight_change < b.predicted_weight_change; });
  return out;
}

// ---- point cloud ----

enum class PointKind { anchor, internal, chain };

struct CloudPoint {
  cplx pos;
  int sign = 1;
  PointKind kind = PointKind::anchor;
  std::string provenance;
};

struct ChainInfo {
  std::size_t edge = 0;
  std::size_t start = 0, end = 0;  // point indices of the p-side and q-side anchors
  std::size_t first = 0;           // point index of z_1
  long m = 0;
  double weight = 0.0;
  double spacing = 0.0;
  cplx dir;
};

struct Configuration {
  std::vector<CloudPoint> points;
  double ell = 0.0, kappa = 0.0;
  std::vector<long> m_map;
  std::vector<double> lambda;                   // per master edge
  std::vector<std::vector<double>> sub_lambda;  // per master vertex, per sub-network edge
  std::vector<ChainInfo> chains;
  // Normalized force expected at sub-network points: f + (e + i t p)/n_p.
  std::vector<cplx> target;
  std::vector<std::size_t> sub_degree;   // sub-network degree of r, chain points: 0
  std::vector<std::size_t> ray_count;    // |V_{p,r}|
  std::vector<std::vector<std::size_t>> sub_edges;  // sub-network adjacency between point indices
};

inline std::string provenance_anchor(bool external, const std::string& p, const std::string& r) {
  return std::string(external ? "anchor:" : "internal:") + p + ":" + r;
}

inline Configuration generate_cloud(const MasterSolveResult& res, const InteractionTable& table) {
  if (res.infinite_kappa) throw DomainError("clouds need a finite kappa solution");
  const SubAssembly& A = res.assembly;
  const WeightedNetwork& M = A.master;
  const double ell = res.ell, kappa = res.kappa;
  Configuration c;
  c.ell = ell;
  c.kappa = kappa;
  c.m_map = res.m_map;
  std::vector<std::size_t> base(M.n());
  for (std::size_t p = 0; p < M.n(); ++p) {
    const WeightedNetwork& S = A.subs[p].net;
    base[p] = c.points.size();
    std::vector<std::size_t> rays(S.n(), 0);
    for (std::size_t k : M.incident(p)) ++rays[A.anchor(p, k)];
    const cplx shift = (res.e + cplx(0.0, res.t) * M.pos(p)) / double(S.n());
    for (std::size_t r = 0; r < S.n(); ++r) {
      const std::string& rid = S.vertex(r).id;
      CloudPoint pt{ell * (kappa * res.phi[p] + res.sub_phi[p][r]), res.signs[p].at(rid),
                    rays[r] ? PointKind::anchor : PointKind::internal,
                    provenance_anchor(rays[r] > 0, M.vertex(p).id, rid)};
      c.points.push_back(pt);
      c.target.push_back(res.f[p][r] + shift);
      c.sub_degree.push_back(S.incident(r).size());
      c.ray_count.push_back(rays[r]);
      c.sub_edges.emplace_back();
    }
    std::vector<double> lam;
    for (std::size_t k = 0; k < S.m(); ++k) {
      lam.push_back(ell * table.alpha(res.sub_a[p][k], ell));
      c.sub_edges[base[p] + S.edge(k).u].push_back(base[p] + S.edge(k).v);
      c.sub_edges[base[p] + S.edge(k).v].push_back(base[p] + S.edge(k).u);
    }
    c.sub_lambda.push_back(lam);
  }
  for (std::size_t k = 0; k < M.m(); ++k) {
    const std::size_t p = M.edge(k).u, q = M.edge(k).v;
    ChainInfo ch;
    ch.edge = k;
    ch.start = base[p] + A.anchor(p, k);
    ch.end = base[q] + A.anchor(q, k);
    ch.m = res.m_map[k];
    ch.weight = res.a_tilde[k];
    const double lambda = ell * table.alpha(ch.weight, ell);
    c.lambda.push_back(lambda);
    ch.spacing = ell - lambda;
    const cplx z0 = c.points[ch.start].pos;
    ch.dir = unit(c.points[ch.end].pos - z0);
    ch.first = c.points.size();
    const int eta = c.points[ch.start].sign;
    for (long j = 1; j < 2 * ch.m; ++j) {
      const int sg = ch.weight < 0.0 && (j % 2) ? -eta : eta;
      c.points.push_back({z0 + double(j) * ch.spacing * ch.dir, sg, PointKind::chain,
                          "chain:" + M.vertex(p).id + ":" + M.vertex(q).id + ":" + std::to_string(j)});
      c.target.push_back(cplx{});
      c.sub_degree.push_back(0);
      c.ray_count.push_back(0);
      c.sub_edges.emplace_back();
    }
    c.chains.push_back(ch);
  }
  return c;
}

inline std::size_t predicted_point_count(const SubAssembly& A, const std::vector<long>& m_map) {
  std::size_t n = 0;
  for (const auto& s : A.subs) n += s.net.n();
  for (long m : m_map) n += std::size_t(2 * m - 1);
  return n;
}

// ---- closest neighbors ----

struct NeighborOptions {
  double C = 2.0;
  double delta = 0.05;
};

struct NeighborReport {
  double ell_min = 0.0, near_hi = 0.0, far_lo = 0.0;
  std::vector<std::vector<std::size_t>> neighbors;
  std::size_t violation_count = 0;
  std::vector<std::pair<std::size_t, std::size_t>> violations;  // first few
  std::size_t bad_interior = 0, bad_anchor = 0;
  double interior_balance = 0.0;  // max |sum| / Upsilon(ell)
  double anchor_balance = 0.0;    // max |sum - Upsilon(ell) target| / (Upsilon(ell) max(1, |target|))
  bool ok() const { return violation_count == 0 && bad_interior == 0 && bad_anchor == 0; }
};

// Uniform grid hash for fixed-radius pair queries.
class PointGrid {
 public:
  PointGrid(const std::vector<cplx>& pts, double cell) : pts_(pts), cell_(cell) {
    for (std::size_t i = 0; i < pts.size(); ++i) cells_[key(pts[i])].push_back(i);
  }
  template <class Fn>
  void for_each_near(cplx z, double radius, Fn&& fn) const {
    const long ix = long(std::floor(z.real() / cell_)), iy = long(std::floor(z.imag() / cell_));
    const long reach = long(std::ceil(radius / cell_));
    for (long dx = -reach; dx <= reach; ++dx)
      for (long dy = -reach; dy <= reach; ++dy) {
        auto it = cells_.find(pack(ix + dx, iy + dy));
        if (it == cells_.end()) continue;
        for (std::size_t j : it->second)
          if (std::abs(pts_[j] - z) <= radius) fn(j);
      }
  }

 private:
  static long long pack(long x, long y) { return (static_cast<long long>(x) << 32) ^ static_cast<long long>(y & 0xffffffffL); }
  long long key(cplx z) const { return pack(long(std::floor(z.real() / cell_)), long(std::floor(z.imag() / cell_))); }
  std::vector<cplx> pts_;
  double cell_;
  std::unordered_map<long long, std::vector<std::size_t>> cells_;
};

inline NeighborReport neighbor_graph(const Configuration& c, const InteractionTable& table,
                                     const NeighborOptions& opt = {}) {
  NeighborReport rep;
  const std::size_t N = c.points.size();
  rep.neighbors.resize(N);
  if (N < 2) return rep;
  std::vector<cplx> pts;
  for (const auto& p : c.points) pts.push_back(p.pos);
  // Minimum pairwise distance, found within a radius that certainly contains it.
  double probe = c.ell * 2.0;
  PointGrid grid(pts, probe);
  double dmin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < N; ++i)
    grid.for_each_near(pts[i], probe, [&](std::size_t j) {
      if (j != i) dmin = std::min(dmin, std::abs(pts[j] - pts[i]));
    });
  if (!std::isfinite(dmin)) {
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = i + 1; j < N; ++j) dmin = std::min(dmin, std::abs(pts[j] - pts[i]));
  }
  rep.ell_min = dmin;
  rep.near_hi = dmin + opt.C;
  rep.far_lo = (1.0 + opt.delta) * dmin;
  const double reach = std::max(rep.near_hi, rep.far_lo);
  PointGrid g2(pts, reach);
  for (std::size_t i = 0; i < N; ++i)
    g2.for_each_near(pts[i], reach, [&](std::size_t j) {
      if (j == i) return;
      const double d = std::abs(pts[j] - pts[i]);
      if (d <= rep.near_hi)
        rep.neighbors[i].push_back(j);
      else if (d < rep.far_lo && i < j) {
        ++rep.violation_count;
        if (rep.violations.size() < 20) rep.violations.push_back({i, j});
      }
    });
  const double ups = table.upsilon(c.ell);
  for (std::size_t i = 0; i < N; ++i) {
    std::sort(rep.neighbors[i].begin(), rep.neighbors[i].end());
    cplx sum{};
    for (std::size_t j : rep.neighbors[i]) {
      const cplx d = pts[j] - pts[i];
      sum += double(c.points[i].sign * c.points[j].sign) * table.upsilon(std::abs(d)) * unit(d);
    }
    if (c.points[i].kind == PointKind::chain) {
      if (rep.neighbors[i].size() != 2) ++rep.bad_interior;
      rep.interior_balance = std::max(rep.interior_balance, std::abs(sum) / ups);
    } else {
      if (rep.neighbors[i].size() != c.sub_degree[i] + c.ray_count[i]) ++rep.bad_anchor;
      rep.anchor_balance = std::max(rep.anchor_balance,
                                    std::abs(sum - ups * c.target[i]) / (ups * std::max(1.0, std::abs(c.target[i]))));
    }
  }
  return rep;
}

// ---- chain corrections ----

// Tridiagonal (2, -1) matrix of size m.
inline Eigen::MatrixXd chain_matrix(long m) {
  if (m < 1) throw DomainError("chain matrix needs m >= 1");
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
  for (long i = 0; i < m; ++i) {
    T(i, i) = 2.0;
    if (i + 1 < m) T(i, i + 1) = T(i + 1, i) = -1.0;
  }
  return T;
}

inline Eigen::MatrixXd chain_matrix_inverse(long m) {
  if (m < 1) throw DomainError("chain matrix needs m >= 1");
  Eigen::MatrixXd Ti(m, m);
  for (long i = 1; i <= m; ++i)
    for (long j = 1; j <= m; ++j) Ti(i - 1, j - 1) = double(std::min(i, j)) - double(i * j) / double(m + 1);
  return Ti;
}

// Closed-form inverse applied in O(m) through prefix sums.
inline std::vector<double> apply_chain_inverse(const std::vector<double>& r) {
  const long m = long(r.size());
  double total = 0.0, weighted = 0.0;
  for (long j = 1; j <= m; ++j) {
    total += r[std::size_t(j - 1)];
    weighted += double(j) * r[std::size_t(j - 1)];
  }
  std::vector<double> out(r.size());
  double below = 0.0, tail = total;  // sum_{j<=i} j r_j, sum_{j>i} r_j
  for (long i = 1; i <= m; ++i) {
    below += double(i) * r[std::size_t(i - 1)];
    tail -= r[std::size_t(i - 1)];
    out[std::size_t(i - 1)] = below + double(i) * tail - double(i) * weighted / double(m + 1);
  }
  return out;
}

// Offsets z'_0..z'_{2m} cancelling the chain residuals R_1..R_{2m-1} to first order.
inline std::vector<cplx> chain_correct(const Configuration& c, std::size_t chain, const std::vector<cplx>& residuals,
                                       const InteractionTable& table) {
  const ChainInfo& ch = c.chains.at(chain);
  const std::size_t M = std::size_t(2 * ch.m - 1);
  if (residuals.size() != M) throw InputError("chain_correct expects one residual per interior chain point");
  const double s = ch.weight < 0.0 ? -1.0 : 1.0;
  const double L = ch.spacing;
  const double dup = table.dupsilon(L), up = table.upsilon(L);
  std::vector<double> par(M), perp(M);
  for (std::size_t j = 0; j < M; ++j) {
    par[j] = s * dot(residuals[j], ch.dir) / dup;
    perp[j] = s * L * wedge(ch.dir, residuals[j]) / up;
  }
  const auto zp = apply_chain_inverse(par), zq = apply_chain_inverse(perp);
  std::vector<cplx> out(M + 2, cplx{});
  for (std::size_t j = 0; j < M; ++j) out[j + 1] = zp[j] * ch.dir + zq[j] * cplx(0.0, 1.0) * ch.dir;
  return out;
}

inline void apply_chain_offsets(Configuration& c, std::size_t chain, const std::vector<cplx>& offsets) {
  const ChainInfo& ch = c.chains.at(chain);
  const std::size_t M = std::size_t(2 * ch.m - 1);
  if (offsets.size() != M + 2) throw InputError("offsets must cover z_0..z_2m");
  if (offsets.front() != cplx{} || offsets.back() != cplx{}) throw DomainError("boundary offsets nonzero");
  for (std::size_t j = 0; j < M; ++j) c.points[ch.first + j].pos += offsets[j + 1];
}

// Balance sums at the interior points of one chain, using the chain neighbors only.
inline std::vector<cplx> chain_residuals(const Configuration& c, std::size_t chain, const InteractionTable& table) {
  const ChainInfo& ch = c.chains.at(chain);
  const std::size_t M = std::size_t(2 * ch.m - 1);
  auto idx = [&](std::size_t j) { return j == 0 ? ch.start : j == M + 1 ? ch.end : ch.first + j - 1; };
  std::vector<cplx> out;
  for (std::size_t j = 1; j <= M; ++j) {
    const CloudPoint& z = c.points[idx(j)];
    cplx sum{};
    for (std::size_t k : {idx(j - 1), idx(j + 1)}) {
      const cplx d = c.points[k].pos - z.pos;
      sum += double(z.sign * c.points[k].sign) * table.upsilon(std::abs(d)) * unit(d);
    }
    out.push_back(sum);
  }
  return out;
}

}  // namespace netforge
