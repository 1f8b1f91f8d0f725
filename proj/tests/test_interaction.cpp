#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <filesystem>

#include "netforge/interaction.hpp"

using namespace netforge;

namespace {

const InteractionTable& T() { return default_table(); }

// Independent shooting for the cubic ground state: RK4 on (u, u') from a series start,
// bisection on u(0) by the fate of the trajectory before r = 25.
double shoot_u0_oracle() {
  auto fate = [](double u0) {
    const double h = 1e-3;
    double r = 1e-4, u = u0 + (u0 - u0 * u0 * u0) * r * r / 4.0, v = (u0 - u0 * u0 * u0) * r / 2.0;
    auto rhs = [](double r, double u, double v) { return std::array<double, 2>{v, -v / r + u - u * u * u}; };
    while (r < 25.0) {
      const auto k1 = rhs(r, u, v);
      const auto k2 = rhs(r + h / 2, u + h / 2 * k1[0], v + h / 2 * k1[1]);
      const auto k3 = rhs(r + h / 2, u + h / 2 * k2[0], v + h / 2 * k2[1]);
      const auto k4 = rhs(r + h, u + h * k3[0], v + h * k3[1]);
      u += h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]);
      v += h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]);
      r += h;
      if (u < 0.0) return 1;              // overshoot: start lower
      if (v > 0.0 && u > 0.0) return -1;  // turns back up: start higher
    }
    return 0;
  };
  double lo = 2.0, hi = 2.5;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    const int s = fate(mid);
    if (s == 0) return mid;
    (s > 0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST(GroundState, CenterValueMatchesShootingOracle) {
  const double oracle = shoot_u0_oracle();
  EXPECT_NEAR(oracle, 2.2062, 1e-4);
  EXPECT_NEAR(T().u_center(), oracle, 1e-6);
  EXPECT_NEAR(T().u0(0.0), T().u_center(), 1e-12);
  EXPECT_EQ(T().du0(0.0), 0.0);
}

TEST(GroundState, PositiveDecreasingAndSolvesOde) {
  double prev = T().u0(0.0);
  for (double r = 0.05; r < 40.0; r += 0.05) {
    const double u = T().u0(r);
    EXPECT_GT(u, 0.0);
    EXPECT_LT(u, prev);
    prev = u;
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < T().grid_cells(); ++i) worst = std::max(worst, std::abs(T().cell_residual(i)));
  EXPECT_LT(worst, 1e-9);
}

TEST(GroundState, TailDecay) {
  const double r = 15.0;
  const double slope = T().du0(r) / T().u0(r);
  EXPECT_NEAR(slope, -1.0 - 1.0 / (2.0 * r), 1e-3);
  const double R = T().grid_end();
  double lo = 1e300, hi = -1e300;
  for (double x = 0.75 * R; x <= R; x += 0.5) {
    const double v = std::log(T().u0(x)) + x + 0.5 * std::log(x);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  EXPECT_LT(hi - lo, 1e-3);
}

TEST(Upsilon, Isotropy) {
  for (double s : {6.0, 12.0}) {
    const double a = T().upsilon_quadrature(s, 0.0).value, b = T().upsilon_quadrature(s, kPi / 2).value;
    EXPECT_NEAR(a / b, 1.0, 1e-8);
  }
}

TEST(Upsilon, BesselTailOracle) {
  // With u0 = A K0 on the support of f(u0)(. - s e): Upsilon(s) = 2 pi A^2 K1(s).
  const double A = T().u0(12.0) / std::cyl_bessel_k(0.0, 12.0);
  for (double s : {16.0, 20.0, 24.0}) {
    const double oracle = 2.0 * kPi * A * A * std::cyl_bessel_k(1.0, s);
    EXPECT_NEAR(T().upsilon(s) / oracle, 1.0, 1e-4) << s;
  }
}

TEST(Upsilon, Asymptotics) {
  double lo = 1e300, hi = -1e300;
  for (double s = 15.0; s <= 25.0; s += 0.5) {
    const double c = -std::log(T().upsilon(s)) - s - 0.5 * std::log(s);
    lo = std::min(lo, c);
    hi = std::max(hi, c);
  }
  EXPECT_LT(hi - lo, 1e-2);
  const double s = 20.0, h = 1e-3;
  const double dU = (T().upsilon(s + h) - T().upsilon(s - h)) / (2 * h);
  EXPECT_NEAR(-T().upsilon(s) / dU / (1.0 - 1.0 / (2 * s)), 1.0, 1e-3);
  for (double x = 15.0; x < 60.0; x += 1.0) {
    const double r = T().upsilon(x + 1) * std::exp(x + 1) * std::sqrt(x + 1) / (T().upsilon(x) * std::exp(x) * std::sqrt(x));
    EXPECT_GT(r, 0.95);
    EXPECT_LT(r, 1.05);
  }
}

TEST(Alpha, UnitWeightsAndBisectionOracle) {
  EXPECT_EQ(T().alpha(1.0, 20.0), 0.0);
  EXPECT_EQ(T().alpha(-1.0, 20.0), 0.0);
  for (double a : {std::exp(1.0), -0.4, 3.0}) {
    const double ell = 20.0, al = T().alpha(a, ell);
    double lo = 0.5 * ell, hi = 2.0 * ell;
    const double target = std::abs(a) * T().upsilon(ell);
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (T().upsilon(mid) > target ? lo : hi) = mid;
    }
    EXPECT_NEAR(al, 1.0 - 0.5 * (lo + hi) / ell, 1e-10);
    EXPECT_NEAR(T().upsilon(ell * (1 - al)) / target, 1.0, 1e-10);
  }
  const double ae = T().alpha(std::exp(1.0), 20.0);
  EXPECT_NEAR(ae, 0.05, 20.0 / 400.0);
  EXPECT_THROW(T().alpha(0.0, 20.0), DomainError);
}

TEST(Alpha, ExpansionAndOddness) {
  const double a = std::exp(1.0);
  std::array<double, 3> err{};
  const double ells[3] = {20.0, 40.0, 80.0};
  for (int i = 0; i < 3; ++i) {
    err[std::size_t(i)] = std::abs(T().alpha(a, ells[i]) - 1.0 / ells[i]);
    EXPECT_LT(std::abs(T().alpha(2.5, ells[i]) + T().alpha(0.4, ells[i])) * ells[i] * ells[i], 5.0);
  }
  const double slope = std::log(err[2] / err[0]) / std::log(ells[2] / ells[0]);
  EXPECT_NEAR(slope, -2.0, 0.3);
}

TEST(Alpha, LogDerivativeExpansion) {
  for (double ell : {20.0, 40.0}) {
    const double a = 1.7, h = 1e-5;
    const double fd = (std::log(1 - T().alpha(a + h, ell)) - std::log(1 - T().alpha(a - h, ell))) / (2 * h);
    const double al = T().alpha(a, ell);
    const double formula = -((2 * ell - 1) / (2 * ell * ell) + al / ell) / a;
    EXPECT_LT(std::abs(fd - formula) * ell * ell * ell, 5.0) << ell;
    EXPECT_NEAR(T().dalpha_da(a, ell), (T().alpha(a + h, ell) - T().alpha(a - h, ell)) / (2 * h), 1e-8);
  }
}

TEST(CStar, RadialQuadratureOracleAndConvergence) {
  // Trapezoid on the stored derivative grid.
  const auto& du = T().grid_du();
  const double h = T().grid_step();
  double acc = 0.0;
  for (std::size_t i = 1; i < du.size(); ++i) {
    const double r0 = double(i - 1) * h, r1 = double(i) * h;
    acc += 0.5 * h * (du[i - 1] * du[i - 1] * r0 + du[i] * du[i] * r1);
  }
  const double cs = T().c_star();
  EXPECT_GT(cs, 0.0);
  EXPECT_NEAR(cs * kPi * acc, 1.0, 1e-6);
  const double c1 = T().c_star(0.02), c2 = T().c_star(0.01), c3 = T().c_star(0.005);
  EXPECT_NEAR(c2 / c3, 1.0, 1e-6);
  const double ratio = (c1 - c2) / (c2 - c3);
  if (std::abs(c2 - c3) > 1e-14 * c3) EXPECT_GE(ratio, 3.5);
}

TEST(Nonlinearity, FamilyValidationAndOddness) {
  EXPECT_THROW((Nonlinearity{0.5, 0.0, 2.0}.validate()), DomainError);
  EXPECT_THROW((Nonlinearity{3.0, 1.0, 4.0}.validate()), DomainError);
  const Nonlinearity nl{5.0, 0.5, 3.0};
  EXPECT_NO_THROW(nl.validate());
  for (double u : {0.3, 1.1, 2.0}) {
    EXPECT_NEAR(nl.f(-u), -nl.f(u), 1e-15);
    EXPECT_NEAR((nl.f(u + 1e-6) - nl.f(u - 1e-6)) / 2e-6, nl.df(u), 1e-6);
    for (double d : {1e-3, -0.2})
      EXPECT_NEAR(nl.increment(u, d), nl.f(u + d) - nl.f(u), 1e-12 * std::max(1.0, std::abs(nl.f(u))));
  }
}

TEST(GroundState, QuinticFamily) {
  TableOptions opt;
  opt.with_upsilon = false;
  const auto t = ground_state(Nonlinearity{5.0, 0.0, 2.0}, opt);
  EXPECT_GT(t.u_center(), 0.0);
  double worst = 0.0;
  for (std::size_t i = 0; i < t.grid_cells(); ++i) worst = std::max(worst, std::abs(t.cell_residual(i)));
  EXPECT_LT(worst, 1e-9);
}

TEST(Cache, HitIsBitStable) {
  const auto dir = std::filesystem::temp_directory_path() / "netforge_cache_test";
  std::filesystem::remove_all(dir);
  TableOptions opt;
  opt.with_upsilon = false;
  const auto a = InteractionTable::load_or_build(Nonlinearity{}, opt, dir.string());
  const auto b = InteractionTable::load_or_build(Nonlinearity{}, opt, dir.string());
  EXPECT_EQ(a.serialize(), b.serialize());
  for (double r : {0.0, 1.3, 7.7, 30.0}) EXPECT_EQ(a.u0(r), b.u0(r));
  std::filesystem::remove_all(dir);
}
