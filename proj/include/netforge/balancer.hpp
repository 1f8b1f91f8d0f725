#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include "netforge/interaction.hpp"
#include "netforge/linearization.hpp"
#include "netforge/newton.hpp"

namespace netforge {

struct PerturbationResult {
  std::vector<cplx> phi;
  std::vector<double> a_tilde;
  cplx e{};
  double t = 0.0;
  double residual = 0.0;
  int iterations = 0;
};

struct SolverOptions {
  double rel_tol = 1e-11;  // convergence when residual < rel_tol * problem scale
  int max_iter = 100;
};

namespace detail {

inline void put(Eigen::VectorXd& v, Eigen::Index i, cplx z) {
  v(i) = z.real();
  v(i + 1) = z.imag();
}
inline cplx get(const Eigen::VectorXd& v, Eigen::Index i) { return {v(i), v(i + 1)}; }

inline void check_converged(const NewtonResult& r, const char* what) {
  if (!r.converged)
    throw SolverError(std::string(what) + ": " + r.message + " (residual " + std::to_string(r.residual) +
                      ", worst equation " + std::to_string(r.worst_equation) + ")");
}

}  // namespace detail

// Re-balances a balanced flexible network with m = 2n - 2 after moving its
// vertices to phi. Unknowns: weights, e, t; gauge <a~ - a, a> = 0.
inline PerturbationResult balance_nearby(const WeightedNetwork& net, const std::vector<cplx>& phi,
                                         const SolverOptions& opt = {}) {
  const std::size_t n = net.n(), m = net.m();
  if (phi.size() != n) throw InputError("phi has wrong size");
  if (m != 2 * n - 2) throw DomainError("balance_nearby needs m = 2n - 2");
  const Certificate cert = certify(net);
  if (!cert.balanced || !cert.flexible) throw DomainError("balance_nearby needs a balanced flexible network");
  if (!cert.df_a_rank || *cert.df_a_rank != int(m) - 1) throw SolverError("rank deficiency in D_aF");
  const std::vector<double> a0 = net.weights();
  const Eigen::Map<const Eigen::VectorXd> a(a0.data(), Eigen::Index(m));
  const WeightedNetwork moved = net.with_positions(phi);
  const Eigen::Index M = Eigen::Index(m), N2 = Eigen::Index(2 * n);

  auto unpack = [&](const Eigen::VectorXd& x) {
    std::vector<double> w(x.data(), x.data() + M);
    return w;
  };
  auto F = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd r(N2 + 1);
    const auto f = forces(moved.with_weights(unpack(x)));
    const cplx e = detail::get(x, M);
    const double t = x(M + 2);
    for (std::size_t p = 0; p < n; ++p) detail::put(r, Eigen::Index(2 * p), f[p] + e + cplx(0, t) * phi[p]);
    r(N2) = (x.head(M) - a).dot(a);
    return r;
  };
  auto J = [&](const Eigen::VectorXd& x) {
    Eigen::MatrixXd Jm = Eigen::MatrixXd::Zero(N2 + 1, M + 3);
    Jm.topLeftCorner(N2, M) = build_differentials(moved.with_weights(unpack(x))).df_a;
    for (std::size_t p = 0; p < n; ++p) {
      Jm(2 * p, M) = 1.0;
      Jm(2 * p + 1, M + 1) = 1.0;
      Jm(2 * p, M + 2) = -phi[p].imag();
      Jm(2 * p + 1, M + 2) = phi[p].real();
    }
    Jm.block(N2, 0, 1, M) = a.transpose();
    return Jm;
  };
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(M + 3);
  x0.head(M) = a;
  NewtonOptions no;
  no.tol = opt.rel_tol * std::max(net.weight_l1(), 1.0);
  no.max_iter = opt.max_iter;
  const NewtonResult r = damped_newton(F, J, x0, no);
  detail::check_converged(r, "balance_nearby");
  PerturbationResult out;
  out.phi = phi;
  out.a_tilde = unpack(r.x);
  out.e = detail::get(r.x, M);
  out.t = r.x(M + 2);
  out.residual = r.residual;
  out.iterations = r.iterations;
  return out;
}

// Length targets as a function of the current weights; derivative w.r.t. each weight.
struct LengthLaw {
  std::function<double(std::size_t k, double a)> target;
  std::function<double(std::size_t k, double a)> dtarget_da;
};

namespace detail {

inline PerturbationResult perturb_with_law(const WeightedNetwork& net, const std::vector<cplx>& f,
                                           const LengthLaw& law, const SolverOptions& opt, const char* what) {
  const std::size_t n = net.n(), m = net.m();
  if (f.size() != n) throw InputError("force vector has wrong size");
  if (!is_unitary(net, 1e-9)) throw DomainError(std::string(what) + " needs a unitary network");
  const Certificate cert = certify(net);
  if (cert.balanced || !cert.flexible) throw DomainError(std::string(what) + " needs an unbalanced flexible network");
  const std::vector<cplx> p0 = net.positions();
  const std::vector<cplx> f0 = forces(net);
  const Eigen::Index N2 = Eigen::Index(2 * n), M = Eigen::Index(m);

  auto build = [&](const Eigen::VectorXd& x) {
    std::vector<cplx> pos(n);
    for (std::size_t p = 0; p < n; ++p) pos[p] = get(x, Eigen::Index(2 * p));
    std::vector<double> w(x.data() + N2, x.data() + N2 + M);
    return net.with_positions(pos).with_weights(w);
  };
  auto F = [&](const Eigen::VectorXd& x) {
    const WeightedNetwork cur = build(x);
    const auto fc = forces(cur);
    const auto len = lengths(cur);
    const cplx e = get(x, N2 + M);
    Eigen::VectorXd r(N2 + M + 2);
    cplx bary{};
    for (std::size_t p = 0; p < n; ++p) {
      put(r, Eigen::Index(2 * p), fc[p] - f0[p] - f[p] - e);
      bary += cur.pos(p) - p0[p];
    }
    for (std::size_t k = 0; k < m; ++k) r(N2 + Eigen::Index(k)) = len[k] - law.target(k, cur.edge(k).weight);
    put(r, N2 + M, bary);
    return r;
  };
  auto J = [&](const Eigen::VectorXd& x) {
    const WeightedNetwork cur = build(x);
    const auto s = build_differentials(cur);
    Eigen::MatrixXd Jm = Eigen::MatrixXd::Zero(N2 + M + 2, N2 + M + 2);
    Jm.topLeftCorner(N2, N2) = s.df_phi;
    Jm.block(0, N2, N2, M) = s.df_a;
    for (std::size_t p = 0; p < n; ++p) {
      Jm(2 * p, N2 + M) = -1.0;
      Jm(2 * p + 1, N2 + M + 1) = -1.0;
      Jm(N2 + M, 2 * p) = 1.0;
      Jm(N2 + M + 1, 2 * p + 1) = 1.0;
    }
    Jm.block(N2, 0, M, N2) = s.dl;
    for (std::size_t k = 0; k < m; ++k)
      Jm(N2 + Eigen::Index(k), N2 + Eigen::Index(k)) = -law.dtarget_da(k, cur.edge(k).weight);
    return Jm;
  };
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(N2 + M + 2);
  for (std::size_t p = 0; p < n; ++p) put(x0, Eigen::Index(2 * p), p0[p]);
  for (std::size_t k = 0; k < m; ++k) x0(N2 + Eigen::Index(k)) = net.edge(k).weight;
  NewtonOptions no;
  no.tol = opt.rel_tol * std::max(net.weight_l1(), 1.0);
  no.max_iter = opt.max_iter;
  const NewtonResult r = damped_newton(F, J, x0, no);
  check_converged(r, what);
  PerturbationResult out;
  const WeightedNetwork fin = build(r.x);
  out.phi = fin.positions();
  out.a_tilde = fin.weights();
  out.e = get(r.x, N2 + M);
  out.residual = r.residual;
  out.iterations = r.iterations;
  return out;
}

}  // namespace detail

// Forces shifted by f_p + e, edge lengths 1 - alpha, barycenter fixed.
inline PerturbationResult perturb_unbalanced(const WeightedNetwork& net, const std::vector<cplx>& f,
                                             const std::vector<double>& alpha, const SolverOptions& opt = {}) {
  if (alpha.size() != net.m()) throw InputError("alpha has wrong size");
  LengthLaw law{[&](std::size_t k, double) { return 1.0 - alpha[k]; }, [](std::size_t, double) { return 0.0; }};
  return detail::perturb_with_law(net, f, law, opt, "perturb_unbalanced");
}

// Lengths 1 - alpha_ell(a~) with the weights solved for. An infinite ell selects
// the limit alpha = 0.
inline PerturbationResult perturb_unbalanced_coupled(const WeightedNetwork& net, const std::vector<cplx>& f,
                                                     const InteractionTable& table, double ell,
                                                     const SolverOptions& opt = {}) {
  if (std::isinf(ell) && ell > 0.0) {
    LengthLaw law{[](std::size_t, double) { return 1.0; }, [](std::size_t, double) { return 0.0; }};
    return detail::perturb_with_law(net, f, law, opt, "perturb_unbalanced_coupled");
  }
  if (!(ell > 0.0)) throw DomainError("ell must be positive");
  LengthLaw law{[&](std::size_t, double a) { return 1.0 - table.alpha(a, ell); },
                [&](std::size_t, double a) { return -table.dalpha_da(a, ell); }};
  return detail::perturb_with_law(net, f, law, opt, "perturb_unbalanced_coupled");
}

struct TriangleRealization {
  double theta = 0.0;
  std::array<double, 3> weights{};  // on [z0,z1], [z1,z2], [z2,z0]
  bool unique = true;
  double residual = 0.0;
};

// Rotation and weights making the unit triangle rotated by theta carry the
// forces f0, f1, f2 at its vertices. The pair (theta + pi, -weights) is the
// other solution; theta is returned in [0, pi).
inline TriangleRealization realize_triangle(cplx f0, cplx f1, cplx f2) {
  const double scale = std::abs(f0) + std::abs(f1) + std::abs(f2);
  if (!(scale > 0.0)) throw DomainError("realize_triangle needs a nonzero force");
  if (std::abs(f0 + f1 + f2) > 1e-12 * std::max(scale, 1.0)) throw DomainError("forces must sum to zero");
  const cplx zeta = polar_unit(2.0 * kPi / 3.0);
  const std::array<cplx, 3> z{1.0 / std::sqrt(3.0), zeta / std::sqrt(3.0), zeta * zeta / std::sqrt(3.0)};
  const std::array<cplx, 3> f{f0, f1, f2};
  // Torque balance: Im(e^{i theta} S) = 0 with S = sum conj(f_j) z_j.
  cplx S{};
  for (int j = 0; j < 3; ++j) S += std::conj(f[j]) * z[j];
  TriangleRealization out;
  out.unique = std::abs(S) > 1e-10 * scale;
  double theta = out.unique ? -std::arg(S) : 0.0;
  theta = std::fmod(theta, kPi);
  if (theta < 0.0) theta += kPi;
  out.theta = theta;
  const cplx rot = polar_unit(theta);
  std::array<cplx, 3> w;
  for (int j = 0; j < 3; ++j) w[j] = rot * z[j];
  // Columns: edges [0,1], [1,2], [2,0]; rows: force components at vertices 0, 1, 2.
  Eigen::Matrix<double, 6, 3> A = Eigen::Matrix<double, 6, 3>::Zero();
  const int ends[3][2] = {{0, 1}, {1, 2}, {2, 0}};
  for (int k = 0; k < 3; ++k) {
    const int i = ends[k][0], j = ends[k][1];
    const cplx u = unit(w[j] - w[i]);
    A(2 * i, k) += u.real();
    A(2 * i + 1, k) += u.imag();
    A(2 * j, k) -= u.real();
    A(2 * j + 1, k) -= u.imag();
  }
  Eigen::Matrix<double, 6, 1> b;
  for (int j = 0; j < 3; ++j) {
    b(2 * j) = f[j].real();
    b(2 * j + 1) = f[j].imag();
  }
  const Eigen::Vector3d a = A.colPivHouseholderQr().solve(b);
  out.residual = (A * a - b).cwiseAbs().maxCoeff();
  if (out.residual > 1e-10 * scale) throw SolverError("triangle realization failed to reproduce the forces");
  for (int k = 0; k < 3; ++k) {
    if (std::abs(a(k)) < 1e-12 * scale) throw DomainError("triangle realization requires a vanishing weight");
    out.weights[std::size_t(k)] = a(k);
  }
  return out;
}

}  // namespace netforge
