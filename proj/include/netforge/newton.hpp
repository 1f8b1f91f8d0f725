#pragma once

#include <cmath>
#include <functional>
#include <string>

#include <Eigen/Dense>

namespace netforge {

struct NewtonOptions {
  double tol = 1e-11;  // on max |residual|, already scaled by the caller
  int max_iter = 100;
  int max_halvings = 30;
  double fd_step = 1e-7;
};

struct NewtonResult {
  Eigen::VectorXd x;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
  Eigen::Index worst_equation = -1;
  std::string message;
};

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using JacobianFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;

// Central-difference Jacobian with steps scaled by |x_i|.
inline Eigen::MatrixXd fd_jacobian(const ResidualFn& F, const Eigen::VectorXd& x, double h) {
  const Eigen::VectorXd f0 = F(x);
  Eigen::MatrixXd J(f0.size(), x.size());
  Eigen::VectorXd xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double step = h * std::max(1.0, std::abs(x(i)));
    xp(i) = x(i) + step;
    const Eigen::VectorXd fp = F(xp);
    xp(i) = x(i) - step;
    const Eigen::VectorXd fm = F(xp);
    xp(i) = x(i);
    J.col(i) = (fp - fm) / (2.0 * step);
  }
  return J;
}

inline double max_abs(const Eigen::VectorXd& v, Eigen::Index* where = nullptr) {
  if (v.size() == 0) {
    if (where) *where = -1;
    return 0.0;
  }
  Eigen::Index i;
  const double m = v.cwiseAbs().maxCoeff(&i);
  if (where) *where = i;
  return m;
}

// Newton with backtracking on the Euclidean residual norm. Square systems use a
// pivoted LU; rectangular or singular ones fall back to a minimum-norm solve.
inline NewtonResult damped_newton(const ResidualFn& F, const JacobianFn& J, Eigen::VectorXd x,
                                  const NewtonOptions& opt) {
  NewtonResult res;
  Eigen::VectorXd r = F(x);
  res.residual = max_abs(r, &res.worst_equation);
  for (int it = 0; it < opt.max_iter; ++it) {
    if (!std::isfinite(res.residual)) break;
    if (res.residual <= opt.tol) {
      res.converged = true;
      break;
    }
    const Eigen::MatrixXd Jx = J ? J(x) : fd_jacobian(F, x, opt.fd_step);
    Eigen::VectorXd dx;
    if (Jx.rows() == Jx.cols()) {
      Eigen::FullPivLU<Eigen::MatrixXd> lu(Jx);
      if (lu.isInvertible()) dx = lu.solve(-r);
    }
    if (dx.size() == 0) dx = Jx.completeOrthogonalDecomposition().solve(-r);
    const double norm0 = r.norm();
    double lambda = 1.0;
    bool accepted = false;
    for (int h = 0; h <= opt.max_halvings; ++h, lambda *= 0.5) {
      const Eigen::VectorXd xt = x + lambda * dx;
      Eigen::VectorXd rt;
      try {
        rt = F(xt);
      } catch (const std::exception&) {
        continue;
      }
      if (rt.allFinite() && rt.norm() < (1.0 - 1e-4 * lambda) * norm0) {
        x = xt;
        r = rt;
        accepted = true;
        break;
      }
    }
    ++res.iterations;
    res.residual = max_abs(r, &res.worst_equation);
    if (!accepted) {
      res.message = "line search failed";
      break;
    }
  }
  if (res.residual <= opt.tol) res.converged = true;
  if (!res.converged && res.message.empty()) res.message = "iteration cap reached";
  res.x = x;
  return res;
}

}  // namespace netforge
