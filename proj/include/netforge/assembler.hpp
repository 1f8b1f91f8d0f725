#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "netforge/configurator.hpp"
#include "netforge/interaction.hpp"

namespace netforge {

struct Bump {
  cplx z;
  int sign = 1;
};

inline std::vector<Bump> bumps_of(const Configuration& c) {
  std::vector<Bump> b;
  for (const auto& p : c.points) b.push_back({p.pos, p.sign});
  return b;
}

// Square grid of (2N+1)^2 nodes centred at `center`.
struct GridWindow {
  cplx center;
  double half_width = 0.0;
  double h = 0.1;
  long N = 0;

  GridWindow() = default;
  GridWindow(cplx c, double half, double step) : center(c), h(step) {
    if (!(step > 0.0) || !(half > 0.0)) throw DomainError("window needs positive size and spacing");
    N = long(std::ceil(half / step - 1e-9));
    half_width = double(N) * step;
  }
  long side() const { return 2 * N + 1; }
  std::size_t size() const { return std::size_t(side() * side()); }
  cplx node(long i, long j) const { return center + cplx(double(i - N) * h, double(j - N) * h); }
  std::size_t index(long i, long j) const { return std::size_t(j * side() + i); }
};

struct FieldWindow {
  GridWindow grid;
  std::vector<double> u;  // sum of signed bumps
  std::vector<double> E;  // residual, empty unless requested
  std::size_t bumps_used = 0;
};

// Cosine smoothstep: 1 for s <= -1, 0 for s >= 1.
inline double cutoff_chi(double s) {
  if (s <= -1.0) return 1.0;
  if (s >= 1.0) return 0.0;
  return 0.5 * (1.0 - std::sin(0.5 * kPi * s));
}

struct NormReport {
  double sup = 0.0;
  double weighted = 0.0;   // sup |E| / sum_z w_z
  double per_point = 0.0;  // sup |E| / max_z w_z
};

struct ProjectionEntry {
  std::size_t point = 0;
  cplx g;          // calibrated projection
  cplx predicted;  // closest-neighbor sum
  double deviation = 0.0;
};

class FieldEvaluator {
 public:
  // `ell` sets the interaction range kept in residuals; points farther than
  // cutoff = 30 + 1.2 ell from a window are dropped.
  FieldEvaluator(std::vector<Bump> bumps, const InteractionTable& table, double ell = 0.0)
      : bumps_(std::move(bumps)), table_(&table), nl_(table.nonlinearity()), cutoff_(30.0 + 1.2 * std::max(ell, 0.0)) {
    std::vector<cplx> pts;
    for (const auto& b : bumps_) pts.push_back(b.z);
    grid_ = std::make_unique<PointGrid>(pts, std::max(cutoff_, 1.0));
  }

  double cutoff() const { return cutoff_; }
  const std::vector<Bump>& bumps() const { return bumps_; }

  std::vector<std::size_t> nearby(const GridWindow& w) const {
    std::vector<std::size_t> out;
    if (bumps_.empty()) return out;
    grid_->for_each_near(w.center, cutoff_ + std::sqrt(2.0) * w.half_width, [&](std::size_t j) { out.push_back(j); });
    std::sort(out.begin(), out.end());
    return out;
  }

  FieldWindow evaluate(const GridWindow& w, bool with_residual, double disc_radius = 0.0) const {
    FieldWindow fw;
    fw.grid = w;
    fw.u.assign(w.size(), 0.0);
    if (with_residual) fw.E.assign(w.size(), 0.0);
    const auto near = nearby(w);
    fw.bumps_used = near.size();
    std::vector<double> v(near.size());
    for (long j = 0; j < w.side(); ++j)
      for (long i = 0; i < w.side(); ++i) {
        const cplx x = w.node(i, j);
        if (disc_radius > 0.0 && std::abs(x - w.center) > disc_radius) continue;
        double total = 0.0;
        std::size_t dom = 0;
        for (std::size_t k = 0; k < near.size(); ++k) {
          const Bump& b = bumps_[near[k]];
          v[k] = double(b.sign) * table_->u0(std::abs(x - b.z));
          total += v[k];
          if (std::abs(v[k]) > std::abs(v[dom])) dom = k;
        }
        const std::size_t idx = w.index(i, j);
        fw.u[idx] = total;
        if (with_residual && !near.empty()) {
          double rest = 0.0, frest = 0.0;
          for (std::size_t k = 0; k < near.size(); ++k)
            if (k != dom) {
              rest += v[k];
              frest += nl_.f(v[k]);
            }
          fw.E[idx] = nl_.increment(v[dom], rest) - frest;
        }
      }
    return fw;
  }

  NormReport norms(const FieldWindow& fw, double delta = -0.5) const {
    NormReport r;
    const auto near = nearby(fw.grid);
    for (long j = 0; j < fw.grid.side(); ++j)
      for (long i = 0; i < fw.grid.side(); ++i) {
        const double e = std::abs(fw.E[fw.grid.index(i, j)]);
        const cplx x = fw.grid.node(i, j);
        double sum = 0.0, best = 0.0;
        for (std::size_t k : near) {
          const double wz = std::exp(delta * std::sqrt(1.0 + std::norm(x - bumps_[k].z)));
          sum += wz;
          best = std::max(best, wz);
        }
        r.sup = std::max(r.sup, e);
        if (sum > 0.0) r.weighted = std::max(r.weighted, e / sum);
        if (best > 0.0) r.per_point = std::max(r.per_point, e / best);
      }
    return r;
  }

  // Uncalibrated quadrature of E against chi(|x - z| - ell/4) grad u0(x - z).
  cplx raw_projection(const FieldWindow& fw, cplx z, double ell) const {
    const double rc = 0.25 * ell;
    if (fw.E.empty()) throw DomainError("projection needs residual samples");
    if (fw.grid.half_width < rc + 1.0 - 1e-9 || std::abs(fw.grid.center - z) > 1e-9 * std::max(1.0, std::abs(z)))
      throw DomainError("projection window must be centred at the point with half-width >= ell/4 + 2");
    cplx acc{};
    const double h2 = fw.grid.h * fw.grid.h;
    for (long j = 0; j < fw.grid.side(); ++j)
      for (long i = 0; i < fw.grid.side(); ++i) {
        const cplx d = fw.grid.node(i, j) - z;
        const double rho = std::abs(d);
        const double chi = cutoff_chi(rho - rc);
        if (chi == 0.0 || rho == 0.0) continue;
        acc += fw.E[fw.grid.index(i, j)] * chi * table_->du0(rho) * (d / rho) * h2;
      }
    return acc;
  }

  static GridWindow projection_window(cplx z, double ell, double h = 0.1) { return {z, 0.25 * ell + 2.0, h}; }

  cplx project(std::size_t point, double ell, double sigma, double h = 0.1) const {
    const Bump& b = bumps_.at(point);
    const GridWindow w = projection_window(b.z, ell, h);
    const FieldWindow fw = evaluate(w, true, 0.25 * ell + 1.0 + 2.0 * h);
    return sigma * double(b.sign) * raw_projection(fw, b.z, ell);
  }

 private:
  std::vector<Bump> bumps_;
  const InteractionTable* table_;
  Nonlinearity nl_;
  double cutoff_;
  std::unique_ptr<PointGrid> grid_;
};

inline FieldWindow evaluate_field(const Configuration& c, const GridWindow& w, const InteractionTable& table) {
  return FieldEvaluator(bumps_of(c), table, c.ell).evaluate(w, false);
}

inline FieldWindow residual(const Configuration& c, const GridWindow& w, const InteractionTable& table) {
  return FieldEvaluator(bumps_of(c), table, c.ell).evaluate(w, true);
}

struct Calibration {
  double sigma = 0.0;
  double ratio = 0.0;  // |raw| / Upsilon(s) of the two-point oracle
};

// Two equal-sign bumps at distance s on the x-axis. The calibrated projection at the
// left bump must point towards the right one.
inline Calibration calibrate_projection(const InteractionTable& table, double s = 8.0, double h = 0.1) {
  FieldEvaluator ev({{cplx{}, 1}, {cplx(s, 0.0), 1}}, table, s);
  const FieldWindow fw = ev.evaluate(FieldEvaluator::projection_window(cplx{}, s, h), true);
  const cplx raw = ev.raw_projection(fw, cplx{}, s);
  if (!(std::abs(raw.real()) > 10.0 * std::abs(raw.imag())))
    throw SolverError("projection calibration is not aligned with the pair axis");
  return {raw.real() > 0.0 ? 1.0 : -1.0, std::abs(raw) / table.upsilon(s)};
}

inline cplx project_force(const Configuration& c, std::size_t point, const InteractionTable& table, double sigma,
                          double h = 0.1) {
  return FieldEvaluator(bumps_of(c), table, c.ell).project(point, c.ell, sigma, h);
}

// Closest-neighbor prediction sum eta eta' Upsilon(|z' - z|) unit(z' - z).
inline cplx predicted_force(const Configuration& c, const NeighborReport& nb, std::size_t i,
                            const InteractionTable& table) {
  cplx sum{};
  for (std::size_t j : nb.neighbors[i]) {
    const cplx d = c.points[j].pos - c.points[i].pos;
    sum += double(c.points[i].sign * c.points[j].sign) * table.upsilon(std::abs(d)) * unit(d);
  }
  return sum;
}

// ---- Pohozaev identity ----

enum class KillingField { dx, dy, rotation };

struct PohozaevResult {
  double value = 0.0;
  double error_estimate = 0.0;
};

namespace detail {

inline double pohozaev_sum(const GridWindow& g, const std::vector<double>& u, const std::vector<double>& f,
                           KillingField xi, long stride) {
  const double h = g.h * double(stride);
  const long S = g.side();
  double acc = 0.0;
  for (long j = 2 * stride; j < S - 2 * stride; j += stride)
    for (long i = 2 * stride; i < S - 2 * stride; i += stride) {
      auto U = [&](long a, long b) { return u[g.index(a, b)]; };
      const double ux = (8.0 * (U(i + stride, j) - U(i - stride, j)) - (U(i + 2 * stride, j) - U(i - 2 * stride, j))) / (12.0 * h);
      const double uy = (8.0 * (U(i, j + stride) - U(i, j - stride)) - (U(i, j + 2 * stride) - U(i, j - 2 * stride))) / (12.0 * h);
      const cplx x = g.node(i, j) - g.center;
      double d = 0.0;
      switch (xi) {
        case KillingField::dx: d = ux; break;
        case KillingField::dy: d = uy; break;
        case KillingField::rotation: d = -x.imag() * ux + x.real() * uy; break;
      }
      acc += d * f[g.index(i, j)] * h * h;
    }
  return acc;
}

}  // namespace detail

// Integral of <Xi, grad u> f over the window; the rotation field turns about the window centre.
inline PohozaevResult pohozaev_defect(const GridWindow& g, const std::vector<double>& u, const std::vector<double>& f,
                                      KillingField xi, double decay_tol = 1e-12) {
  if (u.size() != g.size() || f.size() != g.size()) throw InputError("samples do not match the window");
  const long S = g.side();
  for (long k = 0; k < S; ++k)
    for (const auto& [i, j] : {std::pair{k, 0L}, std::pair{k, S - 1}, std::pair{0L, k}, std::pair{S - 1, k}})
      if (std::abs(u[g.index(i, j)]) > decay_tol || std::abs(f[g.index(i, j)]) > decay_tol)
        throw DomainError("fields do not decay at the window boundary");
  PohozaevResult r;
  r.value = detail::pohozaev_sum(g, u, f, xi, 1);
  const double coarse = detail::pohozaev_sum(g, u, f, xi, 2);
  // Fourth-order scheme: I_h - I_2h is about 15 times the error of I_h.
  r.error_estimate = std::abs(r.value - coarse) / 15.0;
  return r;
}

// ---- discrete Newton refinement ----

struct RefineOptions {
  double tol = 1e-10;
  int max_iter = 30;
  double drift_tol = 0.1;  // flag when max |u - u~| exceeds this
};

struct RefineResult {
  GridWindow grid;
  std::vector<double> u, u_initial;
  std::vector<double> residual_history;
  bool converged = false;
  bool drifted = false;
  double max_change = 0.0;
  std::string message;
};

// Residual of the 5-point scheme for Lap u - u + f(u) with zero boundary values.
inline std::vector<double> discrete_residual(const GridWindow& g, const std::vector<double>& u, const Nonlinearity& nl) {
  const long S = g.side();
  const double ih2 = 1.0 / (g.h * g.h);
  std::vector<double> r(u.size(), 0.0);
  for (long j = 1; j < S - 1; ++j)
    for (long i = 1; i < S - 1; ++i) {
      const std::size_t k = g.index(i, j);
      const double lap =
          (u[g.index(i + 1, j)] + u[g.index(i - 1, j)] + u[g.index(i, j + 1)] + u[g.index(i, j - 1)] - 4.0 * u[k]) * ih2;
      r[k] = lap - u[k] + nl.f(u[k]);
    }
  return r;
}

inline RefineResult refine(const std::vector<Bump>& bumps, cplx center, double half_width, double h,
                           const InteractionTable& table, const RefineOptions& opt = {}) {
  if (!(h > 0.0) || h > 0.1 + 1e-12) throw DomainError("refine needs 0 < h <= 0.1");
  for (const auto& b : bumps)
    if (std::abs(b.z.real() - center.real()) > half_width - 8.0 || std::abs(b.z.imag() - center.imag()) > half_width - 8.0)
      throw DomainError("configuration must fit in the domain with margin >= 8");
  const Nonlinearity& nl = table.nonlinearity();
  RefineResult res;
  res.grid = GridWindow(center, half_width, h);
  const GridWindow& g = res.grid;
  FieldEvaluator ev(bumps, table);
  res.u = ev.evaluate(g, false).u;
  const long S = g.side();
  for (long k = 0; k < S; ++k) {
    res.u[g.index(k, 0)] = res.u[g.index(k, S - 1)] = 0.0;
    res.u[g.index(0, k)] = res.u[g.index(S - 1, k)] = 0.0;
  }
  res.u_initial = res.u;
  // Unknowns are the interior nodes.
  const long I = S - 2;
  auto var = [&](long i, long j) { return (j - 1) * I + (i - 1); };
  const double ih2 = 1.0 / (h * h);
  auto max_abs_vec = [](const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
  };
  std::vector<double> r = discrete_residual(g, res.u, nl);
  res.residual_history.push_back(max_abs_vec(r));
  for (int it = 0; it < opt.max_iter && res.residual_history.back() > 0.1 * opt.tol; ++it) {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(std::size_t(5 * I * I));
    Eigen::VectorXd rhs(I * I);
    for (long j = 1; j < S - 1; ++j)
      for (long i = 1; i < S - 1; ++i) {
        const long row = var(i, j);
        trip.emplace_back(row, row, -4.0 * ih2 - 1.0 + nl.df(res.u[g.index(i, j)]));
        if (i > 1) trip.emplace_back(row, var(i - 1, j), ih2);
        if (i < S - 2) trip.emplace_back(row, var(i + 1, j), ih2);
        if (j > 1) trip.emplace_back(row, var(i, j - 1), ih2);
        if (j < S - 2) trip.emplace_back(row, var(i, j + 1), ih2);
        rhs(row) = -r[g.index(i, j)];
      }
    Eigen::SparseMatrix<double> J(I * I, I * I);
    J.setFromTriplets(trip.begin(), trip.end());
    Eigen::VectorXd dx;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(J);
    if (ldlt.info() == Eigen::Success) {
      dx = ldlt.solve(rhs);
      for (int k = 0; k < 2 && dx.allFinite(); ++k) dx += ldlt.solve(rhs - J * dx);
    }
    if (dx.size() == 0 || ldlt.info() != Eigen::Success || !dx.allFinite()) {
      Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
      lu.analyzePattern(J);
      lu.factorize(J);
      if (lu.info() != Eigen::Success) {
        res.message = "linear solve failed";
        break;
      }
      dx = lu.solve(rhs);
      for (int k = 0; k < 2 && dx.allFinite(); ++k) dx += lu.solve(rhs - J * dx);
    }
    double lambda = 1.0;
    bool accepted = false;
    const double norm0 = Eigen::Map<const Eigen::VectorXd>(r.data(), Eigen::Index(r.size())).norm();
    for (int k = 0; k < 30; ++k, lambda *= 0.5) {
      std::vector<double> ut = res.u;
      for (long j = 1; j < S - 1; ++j)
        for (long i = 1; i < S - 1; ++i) ut[g.index(i, j)] += lambda * dx(var(i, j));
      std::vector<double> rt = discrete_residual(g, ut, nl);
      if (Eigen::Map<const Eigen::VectorXd>(rt.data(), Eigen::Index(rt.size())).norm() < (1.0 - 1e-4 * lambda) * norm0) {
        res.u = std::move(ut);
        r = std::move(rt);
        accepted = true;
        break;
      }
    }
    const double prev = res.residual_history.back();
    res.residual_history.push_back(max_abs_vec(r));
    if (accepted && res.residual_history.back() <= opt.tol && res.residual_history.back() > 0.5 * prev) break;
    if (!accepted) {
      if (res.residual_history.back() > opt.tol) res.message = "line search failed";
      break;
    }
  }
  res.converged = res.residual_history.back() <= opt.tol;
  for (std::size_t k = 0; k < res.u.size(); ++k)
    res.max_change = std::max(res.max_change, std::abs(res.u[k] - res.u_initial[k]));
  res.drifted = res.max_change > opt.drift_tol;
  if (!res.converged && res.message.empty()) res.message = "iteration cap reached";
  if (res.converged && res.drifted) res.message = "converged away from the initial field";
  return res;
}

}  // namespace netforge
