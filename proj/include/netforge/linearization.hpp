#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "netforge/network.hpp"

namespace netforge {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Vertex displacement coordinates are ordered (x_0, y_0, x_1, y_1, ...).
struct DifferentialSystem {
  MatrixXd dl;      // m x 2n
  MatrixXd df_phi;  // 2n x 2n
  MatrixXd df_a;    // 2n x m
  VectorXd t_vector;

  std::size_t n() const { return std::size_t(df_phi.rows() / 2); }
  std::size_t m() const { return std::size_t(dl.rows()); }

  // [[D_Phi F, D_a F], [DL, 0]].
  MatrixXd lambda() const {
    const Eigen::Index N = df_phi.rows(), M = dl.rows();
    MatrixXd L = MatrixXd::Zero(N + M, N + M);
    L.topLeftCorner(N, N) = df_phi;
    L.topRightCorner(N, M) = df_a;
    L.bottomLeftCorner(M, N) = dl;
    return L;
  }

  // Lambda with the extra column (0; T).
  MatrixXd lambda_closed() const {
    const Eigen::Index N = df_phi.rows(), M = dl.rows();
    MatrixXd L = MatrixXd::Zero(N + M, N + M + 1);
    L.leftCols(N + M) = lambda();
    L.block(N, N + M, M, 1) = t_vector;
    return L;
  }
};

inline DifferentialSystem build_differentials(const WeightedNetwork& net) {
  const Eigen::Index n = Eigen::Index(net.n()), m = Eigen::Index(net.m());
  DifferentialSystem s;
  s.dl = MatrixXd::Zero(m, 2 * n);
  s.df_phi = MatrixXd::Zero(2 * n, 2 * n);
  s.df_a = MatrixXd::Zero(2 * n, m);
  s.t_vector = VectorXd::Zero(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    const Edge& e = net.edge(std::size_t(k));
    const Eigen::Index p = Eigen::Index(e.u), q = Eigen::Index(e.v);
    const cplx d = net.pos(e.v) - net.pos(e.u);
    const double len = std::abs(d);
    if (!(len > 0.0)) throw GeometryError("zero-length edge");
    const cplx u = d / len;
    // Length row: <p - q, dPhi_p - dPhi_q>/|p - q|.
    s.dl(k, 2 * p) = -u.real();
    s.dl(k, 2 * p + 1) = -u.imag();
    s.dl(k, 2 * q) = u.real();
    s.dl(k, 2 * q + 1) = u.imag();
    s.df_a(2 * p, k) = u.real();
    s.df_a(2 * p + 1, k) = u.imag();
    s.df_a(2 * q, k) = -u.real();
    s.df_a(2 * q + 1, k) = -u.imag();
    // a (I - u u^T)/|q - p| acting on dPhi_q - dPhi_p.
    Eigen::Matrix2d P;
    P << 1.0 - u.real() * u.real(), -u.real() * u.imag(), -u.real() * u.imag(), 1.0 - u.imag() * u.imag();
    const Eigen::Matrix2d M = e.weight * P / len;
    s.df_phi.block<2, 2>(2 * p, 2 * q) += M;
    s.df_phi.block<2, 2>(2 * p, 2 * p) -= M;
    s.df_phi.block<2, 2>(2 * q, 2 * p) += M;
    s.df_phi.block<2, 2>(2 * q, 2 * q) -= M;
    s.t_vector(k) = len * std::log(std::abs(e.weight));
  }
  return s;
}

inline double adjointness_defect(const DifferentialSystem& s) {
  if (s.dl.size() == 0) return 0.0;
  return (s.df_a.transpose() + s.dl).cwiseAbs().maxCoeff();
}

struct RankInfo {
  int rank = 0;
  double gap_ratio = std::numeric_limits<double>::infinity();
  double threshold = 0.0;
  std::vector<double> singular_values;
};

// Numerical rank: singular values above max(rows,cols) * eps * sigma_max * safety count.
inline RankInfo numerical_rank(const MatrixXd& A, double safety = 1e3) {
  RankInfo r;
  if (A.size() == 0) return r;
  Eigen::JacobiSVD<MatrixXd> svd(A);
  const VectorXd& sv = svd.singularValues();
  r.singular_values.assign(sv.data(), sv.data() + sv.size());
  const double smax = sv.size() ? sv(0) : 0.0;
  r.threshold = double(std::max(A.rows(), A.cols())) * std::numeric_limits<double>::epsilon() * smax * safety;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > r.threshold) ++r.rank;
  if (r.rank > 0 && r.rank < sv.size()) {
    const double dropped = sv(r.rank);
    r.gap_ratio = dropped > 0.0 ? sv(r.rank - 1) / dropped : std::numeric_limits<double>::infinity();
  }
  return r;
}

struct CertifyOptions {
  double balance_tol = 1e-9;  // relative to sum |a|
  double unitary_tol = 1e-9;
  double rank_safety = 1e3;
  double min_gap_ratio = 10.0;
};

struct Certificate {
  std::size_t n = 0, m = 0;
  bool connected = false, embedded = false, unitary = false, balanced = false;
  double max_force = 0.0;
  int lambda_rank = 0;
  int required_rank_flexible = 0;
  bool flexible = false;
  bool closable_defined = false;
  int closable_rank = 0;
  bool closable = false;
  std::vector<double> singular_values;
  double gap_ratio = 0.0;
  double closable_gap_ratio = std::numeric_limits<double>::infinity();
  std::vector<double> closable_singular_values;
  // Cross-check for balanced networks with m = 2n - 2: flexible iff rank D_aF = m - 1.
  std::optional<int> df_a_rank;
  std::optional<bool> df_a_check_agrees;
  bool borderline = false;
};

inline Certificate certify(const WeightedNetwork& net, const CertifyOptions& opt = {}) {
  Certificate c;
  c.n = net.n();
  c.m = net.m();
  c.connected = is_connected(net);
  c.embedded = is_embedded(net);
  c.unitary = net.m() == 0 || is_unitary(net, opt.unitary_tol);
  c.max_force = max_force(net);
  c.balanced = c.max_force < opt.balance_tol * std::max(net.weight_l1(), 1e-300) || net.m() == 0;
  const auto sys = build_differentials(net);
  const auto rk = numerical_rank(sys.lambda(), opt.rank_safety);
  c.lambda_rank = rk.rank;
  c.singular_values = rk.singular_values;
  c.gap_ratio = rk.gap_ratio;
  const int n = int(net.n()), m = int(net.m());
  c.required_rank_flexible = c.balanced ? 2 * n + m - 4 : 2 * n + m - 2;
  c.flexible = c.lambda_rank == c.required_rank_flexible;
  c.borderline = !(rk.gap_ratio > opt.min_gap_ratio);
  if (c.balanced && c.flexible) {
    c.closable_defined = true;
    const auto rc = numerical_rank(sys.lambda_closed(), opt.rank_safety);
    c.closable_rank = rc.rank;
    c.closable_gap_ratio = rc.gap_ratio;
    c.closable_singular_values = rc.singular_values;
    c.closable = rc.rank == 2 * n + m - 3;
    if (!(rc.gap_ratio > opt.min_gap_ratio)) c.borderline = true;
  }
  if (c.balanced && m == 2 * n - 2 && m > 0) {
    const auto ra = numerical_rank(sys.df_a, opt.rank_safety);
    c.df_a_rank = ra.rank;
    c.df_a_check_agrees = (ra.rank == m - 1) == c.flexible;
  }
  return c;
}

// Orders a weighted cycle as z_0, ..., z_{n-1} with edge weights a_j on [z_j, z_{j+1}].
inline void cycle_order(const WeightedNetwork& net, std::vector<cplx>& z, std::vector<double>& a) {
  const std::size_t n = net.n();
  if (n < 3 || net.m() != n || !is_connected(net)) throw InputError("input is not a cycle");
  for (std::size_t i = 0; i < n; ++i)
    if (net.incident(i).size() != 2) throw InputError("input is not a cycle");
  z.clear();
  a.clear();
  std::size_t cur = 0, prev_edge = net.incident(0)[0];
  for (std::size_t step = 0; step < n; ++step) {
    const auto& inc = net.incident(cur);
    const std::size_t e = step == 0 ? inc[0] : (inc[0] == prev_edge ? inc[1] : inc[0]);
    z.push_back(net.pos(cur));
    a.push_back(net.edge(e).weight);
    cur = net.other(e, cur);
    prev_edge = e;
  }
}

struct PolygonCriterion {
  cplx A, B;
  bool independent = false;
};

inline PolygonCriterion polygon_criterion_vectors(const WeightedNetwork& net, double tol = 1e-9) {
  std::vector<cplx> z;
  std::vector<double> a;
  cycle_order(net, z, a);
  PolygonCriterion r{};
  for (std::size_t j = 0; j < z.size(); ++j) {
    const cplx dz = z[(j + 1) % z.size()] - z[j];
    r.A += dz.real() / a[j] * dz;
    r.B += dz.imag() / a[j] * dz;
  }
  r.independent = std::abs(wedge(r.A, r.B)) > tol * std::abs(r.A) * std::abs(r.B) && std::abs(r.A) > tol &&
                  std::abs(r.B) > tol;
  return r;
}

inline bool polygon_flexibility_criterion(const WeightedNetwork& net) {
  return polygon_criterion_vectors(net).independent;
}

inline double nv_closability_criterion(double theta) {
  if (!(theta > 0.0 && theta < kPi / 2.0)) throw DomainError("theta must lie in (0, pi/2)");
  const double s = std::sin(theta), c = std::cos(theta);
  return s * s * std::log(2.0 * s) + c * c * std::log(2.0 * c);
}

}  // namespace netforge
