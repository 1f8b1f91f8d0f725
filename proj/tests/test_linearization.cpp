#include <gtest/gtest.h>

#include <random>

#include "netforge/balancer.hpp"
#include "netforge/catalog.hpp"
#include "netforge/linearization.hpp"
#include "test_util.hpp"

using namespace netforge;

namespace {

Eigen::VectorXd flat(const std::vector<cplx>& z) {
  Eigen::VectorXd v(2 * Eigen::Index(z.size()));
  for (std::size_t i = 0; i < z.size(); ++i) {
    v(2 * Eigen::Index(i)) = z[i].real();
    v(2 * Eigen::Index(i) + 1) = z[i].imag();
  }
  return v;
}

std::vector<WeightedNetwork> flexible_catalog() {
  return {chain_network(4), regular_polygon(5), polygon_center(5), polygon_center(7), network_nv(kPi / 5),
          network_ny(0.3, 0.8), network_nc(0.3, 0.5)};
}

}  // namespace

TEST(Differentials, SingleEdge) {
  WeightedNetwork net({{"a", {0, 0}}, {"b", {1, 0}}}, {{"a", "b", 1.0}});
  const auto s = build_differentials(net);
  ASSERT_EQ(s.dl.rows(), 1);
  ASSERT_EQ(s.dl.cols(), 4);
  EXPECT_DOUBLE_EQ(s.dl(0, 0), -1.0);
  EXPECT_DOUBLE_EQ(s.dl(0, 2), 1.0);
  EXPECT_NEAR(s.dl.row(0).norm(), std::sqrt(2.0), 1e-15);
  // As a functional on displacements: <p - q, dPhi_p - dPhi_q>/|p - q|.
  Eigen::VectorXd d(4);
  d << 0.3, -0.2, 0.1, 0.7;
  EXPECT_NEAR((s.dl * d)(0), (cplx(0, 0) - cplx(1, 0)).real() * (0.3 - 0.1), 1e-15);
}

TEST(Differentials, ChainLengthRowsAreRealParts) {
  const auto net = chain_network(3);
  const auto s = build_differentials(net);
  // w_j = Phi_{j+1} - Phi_j; DL = Re w_j for unit horizontal edges.
  Eigen::VectorXd d(6);
  d << 0.1, 0.2, -0.4, 0.5, 0.3, -0.6;
  const Eigen::VectorXd l = s.dl * d;
  EXPECT_NEAR(l(0), -0.4 - 0.1, 1e-15);
  EXPECT_NEAR(l(1), 0.3 + 0.4, 1e-15);
}

TEST(Differentials, ForcesAreLinearInWeights) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 30; ++t) {
    const auto net = nftest::random_network(rng, 7, 6);
    const auto s = build_differentials(net);
    Eigen::VectorXd a(Eigen::Index(net.m()));
    for (std::size_t k = 0; k < net.m(); ++k) a(Eigen::Index(k)) = net.edge(k).weight;
    EXPECT_LT((s.df_a * a - flat(forces(net))).cwiseAbs().maxCoeff(), 1e-13);
  }
}

TEST(Differentials, DfPhiMatchesFiniteDifferences) {
  std::mt19937_64 rng(5);
  const auto net = nftest::random_network(rng, 6, 5);
  const auto s = build_differentials(net);
  const double h = 1e-6;
  for (Eigen::Index c = 0; c < 2 * Eigen::Index(net.n()); ++c) {
    auto zp = net.positions(), zm = net.positions();
    const std::size_t i = std::size_t(c / 2);
    const cplx d = c % 2 ? cplx(0, h) : cplx(h, 0);
    zp[i] += d;
    zm[i] -= d;
    const Eigen::VectorXd fd = (flat(forces(net.with_positions(zp))) - flat(forces(net.with_positions(zm)))) / (2 * h);
    EXPECT_LT((fd - s.df_phi.col(c)).cwiseAbs().maxCoeff(), 1e-7);
    const auto lp = lengths(net.with_positions(zp)), lm = lengths(net.with_positions(zm));
    for (std::size_t k = 0; k < net.m(); ++k) EXPECT_NEAR((lp[k] - lm[k]) / (2 * h), s.dl(Eigen::Index(k), c), 1e-7);
  }
}

TEST(Differentials, TVector) {
  const auto net = polygon_center(5);
  const auto s = build_differentials(net);
  const auto L = lengths(net);
  for (std::size_t k = 0; k < net.m(); ++k)
    EXPECT_NEAR(s.t_vector(Eigen::Index(k)), L[k] * std::log(std::abs(net.edge(k).weight)), 1e-15);
}

TEST(Adjointness, CatalogAndRandom) {
  for (const auto& net : flexible_catalog()) {
    double amax = 1.0;
    for (double w : net.weights()) amax = std::max(amax, std::abs(w));
    EXPECT_LT(adjointness_defect(build_differentials(net)), 1e-12 * amax);
  }
  std::mt19937_64 rng(13);
  for (int t = 0; t < 100; ++t)
    EXPECT_LT(adjointness_defect(build_differentials(nftest::random_network(rng, 8, 8))), 1e-12);
}

TEST(Certify, TriangleWeightSum) {
  EXPECT_FALSE(certify(triangle_network(0.0, 1, 1, -2)).flexible);
  EXPECT_TRUE(certify(triangle_network(0.0, 1, 1, 1)).flexible);
}

TEST(Certify, PolygonWithCenter) {
  for (std::size_t k = 3; k <= 12; ++k) {
    const Certificate c = certify(polygon_center(k));
    EXPECT_TRUE(c.balanced);
    EXPECT_TRUE(c.flexible) << k;
    ASSERT_TRUE(c.df_a_rank);
    EXPECT_EQ(*c.df_a_rank, int(2 * k - 1));
    EXPECT_EQ(c.closable, k != 6) << k;
    EXPECT_FALSE(c.borderline) << k;
  }
}

TEST(Certify, NVMatchesClosabilityCriterion) {
  for (double th : {kPi / 12, kPi / 8, kPi / 6, kPi / 5, kPi / 4.5}) {
    const Certificate c = certify(network_nv(th));
    EXPECT_TRUE(c.balanced && c.flexible && c.closable);
    EXPECT_EQ(c.closable, nv_closability_criterion(th) != 0.0);
  }
  EXPECT_NEAR(nv_closability_criterion(kPi / 4), std::log(std::sqrt(2.0)), 1e-15);
  EXPECT_NEAR(nv_closability_criterion(kPi / 6), 0.75 * std::log(std::sqrt(3.0)), 1e-15);
  EXPECT_NEAR(nv_closability_criterion(1e-8), std::log(2.0), 1e-12);
}

TEST(PolygonCriterion, AgreesWithCertify) {
  EXPECT_TRUE(polygon_flexibility_criterion(regular_polygon(6)));
  const auto sq = polygon_network({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
  EXPECT_EQ(polygon_flexibility_criterion(sq), certify(sq).flexible);
  // Brute force over small rational weights for a dependent instance.
  int dependent = 0;
  for (int a = -2; a <= 2; ++a)
    for (int b = -2; b <= 2; ++b)
      for (int c = -2; c <= 2; ++c)
        for (int d = -2; d <= 2; ++d) {
          if (!a || !b || !c || !d) continue;
          const auto net = polygon_network({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {double(a), double(b), double(c), double(d)});
          const bool crit = polygon_flexibility_criterion(net);
          EXPECT_EQ(crit, certify(net).flexible);
          dependent += !crit;
        }
  EXPECT_GT(dependent, 0);
  EXPECT_THROW(polygon_flexibility_criterion(chain_network(4)), InputError);
}

TEST(Kernel, BalancedNetworksAnnihilateRigidMotions) {
  for (const auto& net : {polygon_center(5), network_nv(kPi / 5), network_nc(0.3, 0.5)}) {
    const auto s = build_differentials(net);
    const std::size_t n = net.n();
    std::vector<cplx> ex(n, 1.0), ey(n, cplx(0, 1)), dil = net.positions(), rot;
    for (const auto& z : dil) rot.push_back(cplx(0, 1) * z);
    // Translations and rotations leave forces and lengths unchanged.
    for (const auto& f : {ex, ey, rot}) {
      EXPECT_LT((s.df_phi * flat(f)).cwiseAbs().maxCoeff(), 1e-10);
      EXPECT_LT((s.dl * flat(f)).cwiseAbs().maxCoeff(), 1e-10);
    }
    // Dilation keeps the balanced forces at zero.
    EXPECT_LT((s.df_phi * flat(dil)).cwiseAbs().maxCoeff(), 1e-10);
    Eigen::VectorXd a(Eigen::Index(net.m()));
    for (std::size_t k = 0; k < net.m(); ++k) a(Eigen::Index(k)) = net.edge(k).weight;
    EXPECT_LT((s.df_a * a).cwiseAbs().maxCoeff(), 1e-10);
    // Force block columns are orthogonal to translations and to (i p).
    const Eigen::MatrixXd L = s.lambda();
    const Eigen::Index N = 2 * Eigen::Index(n);
    for (Eigen::Index c = 0; c < L.cols(); ++c)
      for (const auto& f : {ex, ey, rot}) EXPECT_LT(std::abs(L.col(c).head(N).dot(flat(f))), 1e-10);
  }
}

TEST(Certify, CountBoundsForceNotFlexible) {
  std::mt19937_64 rng(17);
  for (int t = 0; t < 40; ++t) {
    const auto net = nftest::random_network(rng, 5, 12);
    const Certificate c = certify(net);
    const int n = int(net.n()), m = int(net.m());
    if (!c.balanced && m > 2 * n - 3) EXPECT_FALSE(c.flexible);
    if (c.balanced && m > 2 * n - 2) EXPECT_FALSE(c.flexible);
  }
  EXPECT_FALSE(certify(complete_pentagon()).flexible);
}

// Balanced networks are perturbed inside the balanced class, others freely.
TEST(Certify, FlexibilityIsOpenUnderPerturbation) {
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> U(-1e-3, 1e-3);
  for (const auto& net : flexible_catalog()) {
    const Certificate c0 = certify(net);
    ASSERT_TRUE(c0.flexible);
    if (c0.balanced && net.m() != 2 * net.n() - 2) continue;
    for (int t = 0; t < 50; ++t) {
      auto z = net.positions();
      for (auto& p : z) p += cplx(U(rng), U(rng));
      WeightedNetwork moved = net.with_positions(z);
      if (c0.balanced) {
        const PerturbationResult r = balance_nearby(net, z);
        moved = net.with_positions(r.phi).with_weights(r.a_tilde);
      } else {
        auto w = net.weights();
        for (auto& a : w) a *= 1.0 + U(rng);
        moved = moved.with_weights(w);
      }
      const Certificate c = certify(moved);
      EXPECT_EQ(c.balanced, c0.balanced);
      EXPECT_TRUE(c.flexible);
    }
  }
}

TEST(Certify, RegularPolygonSubdivided) {
  for (std::size_t k = 3; k <= 8; ++k) {
    const Certificate c = certify(regular_polygon_k(5, k));
    EXPECT_TRUE(c.flexible) << k;
    EXPECT_FALSE(c.borderline) << k;
  }
  EXPECT_TRUE(certify(chain_network(5)).flexible);
  EXPECT_TRUE(certify(regular_polygon(7)).flexible);
}

TEST(Certify, ComputerAlgebraReplacements) {
  for (auto [nu, mu] : {std::pair{0.3, 0.8}, {0.5, 1.2}}) {
    const Certificate c = certify(network_ny(nu, mu));
    EXPECT_TRUE(c.flexible && c.closable && !c.borderline);
  }
  for (auto [a, b] : {std::pair{0.3, 0.5}, {0.1, 0.9}}) {
    const Certificate c = certify(network_nc(a, b));
    EXPECT_TRUE(c.flexible && c.closable && !c.borderline);
  }
}
