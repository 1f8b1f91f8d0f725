#include <gtest/gtest.h>

#include <random>

#include "netforge/assembly.hpp"
#include "netforge/catalog.hpp"
#include "netforge/configurator.hpp"
#include "netforge/interaction.hpp"

using namespace netforge;

namespace {

const InteractionTable& table() { return default_table(); }

SubForces small_forces(const SubAssembly& A, double scale) {
  SubForces f = zero_forces(A);
  for (std::size_t p = 0; p < f.size(); ++p)
    for (std::size_t r = 0; r < f[p].size(); ++r) f[p][r] = scale * polar_unit(1.3 * double(p) + 2.1 * double(r) + 0.4);
  return f;
}

// Solves example_5_1 (k = 7) at ell = 60, trying the best scanned kappa values in turn.
const MasterSolveResult& solved_example() {
  static const MasterSolveResult res = [] {
    const SubAssembly A = example_5_1(7);
    const double ell = 60.0;
    const SubForces f = small_forces(A, 0.03);
    const auto scan = scan_kappa(A, ell, f, table(), 14.0 * ell, 17.0 * ell, 1.0);
    for (std::size_t i = 0; i < std::min<std::size_t>(scan.size(), 5); ++i) {
      try {
        return solve_master(A, scan[i].kappa, ell, f, table());
      } catch (const SolverError&) {
      }
    }
    throw SolverError("no scanned kappa converged");
  }();
  return res;
}

// Hand-built result for an unperturbed assembly: every field copied from the input.
MasterSolveResult unperturbed(const SubAssembly& A, double kappa, double ell) {
  MasterSolveResult r;
  r.assembly = A;
  r.kappa = kappa;
  r.ell = ell;
  r.m_map = quantize(A, kappa, ell, table());
  r.phi = A.master.positions();
  r.a_tilde = A.master.weights();
  for (const auto& s : A.subs) {
    r.sub_phi.push_back(s.net.positions());
    r.sub_a.push_back(s.net.weights());
  }
  r.f = zero_forces(A);
  r.signs = verify_assembly(A).signs;
  return r;
}

}  // namespace

TEST(Quantize, HalfLengthCeiling) {
  EXPECT_EQ(quantize_length(10.0), 5);
  EXPECT_EQ(quantize_length(10.7), 6);
  EXPECT_EQ(quantize_length(11.3), 6);
  EXPECT_EQ(quantize_length(0.5), 1);
  EXPECT_THROW(quantize_length(0.0), DomainError);
  EXPECT_THROW(quantize_length(-3.0), DomainError);
}

TEST(Quantize, CoversStretchedEdges) {
  const SubAssembly A = example_5_1(7);
  const double kappa = 900.0, ell = 60.0;
  const auto m = quantize(A, kappa, ell, table());
  ASSERT_EQ(m.size(), A.master.m());
  for (std::size_t k = 0; k < m.size(); ++k) {
    const auto& e = A.master.edge(k);
    const double x = kappa * std::abs(A.master.pos(e.v) - A.master.pos(e.u)) / (1.0 - table().alpha(e.weight, ell));
    EXPECT_GE(2.0 * double(m[k]), x);
    EXPECT_LT(2.0 * double(m[k]) - x, 2.0);
  }
}

TEST(VerifyAssembly, Example51PassesAtSeven) {
  const auto rep = verify_assembly(example_5_1(7));
  EXPECT_TRUE(rep.all()) << rep.summary();
}

TEST(VerifyAssembly, Example51HexagonFailsRayCondition) {
  const auto rep = verify_assembly(example_5_1(6));
  EXPECT_FALSE(rep.all());
  EXPECT_FALSE(rep.conditions[5].pass) << rep.summary();
}

TEST(VerifyAssembly, Example52WithCorrectedWeightsPasses) {
  const auto rep = verify_assembly(example_5_2(4));
  EXPECT_TRUE(rep.all()) << rep.summary();
}

TEST(VerifyAssembly, Example52WithPositiveSideWeightsFails) {
  SubAssembly A = example_5_2(4);
  for (std::size_t p = 0; p < A.master.n(); ++p) {
    if (A.is_singleton(p)) continue;
    auto w = A.subs[p].net.weights();
    for (double& x : w)
      if (x < 0.0) x = -x;
    A.subs[p].net = A.subs[p].net.with_weights(w);
  }
  const auto rep = verify_assembly(A);
  EXPECT_FALSE(rep.all());
}

TEST(VerifyAssembly, NetworkCatalogAssembliesPass) {
  for (const auto& name : assembly_catalog_names()) {
    const auto rep = verify_assembly(assembly_catalog(name, {}));
    EXPECT_TRUE(rep.all()) << name << ": " << rep.summary();
  }
}

TEST(VerifyAssembly, InconsistentSignsGiveWitnessCycle) {
  SubAssembly A = example_5_1(7);
  const std::size_t o = A.master.index_of("o");
  A.subs[o].signs[indexed_id("z", 0)] = 1;
  A.subs[o].signs[indexed_id("z", 1)] = -1;
  const auto rep = verify_assembly(A);
  EXPECT_FALSE(rep.conditions[6].pass);
  ASSERT_GE(rep.sign_witness.size(), 3u);
  EXPECT_EQ(rep.sign_witness.front(), rep.sign_witness.back());
  bool touches = false;
  for (const auto& s : rep.sign_witness) touches = touches || s == "o:z00" || s == "o:z01";
  EXPECT_TRUE(touches);
}

TEST(VerifyAssembly, OddNegativeCycleIsInconsistent) {
  SubAssembly A = example_5_1(7);
  const std::size_t o = A.master.index_of("o");
  A.subs[o].net = A.subs[o].net.with_weights(std::vector<double>(A.subs[o].net.m(), -1.0));
  EXPECT_FALSE(verify_assembly(A).conditions[6].pass);
}

TEST(VerifyAssembly, SignsFollowNegativeEdges) {
  const SubAssembly A = example_5_2(4);
  const auto rep = verify_assembly(A);
  ASSERT_TRUE(rep.conditions[6].pass);
  for (std::size_t p = 0; p < A.master.n(); ++p)
    for (const auto& e : A.subs[p].net.edges()) {
      const int su = rep.signs[p].at(A.subs[p].net.vertex(e.u).id), sv = rep.signs[p].at(A.subs[p].net.vertex(e.v).id);
      EXPECT_EQ(su * sv, e.weight < 0.0 ? -1 : 1);
    }
  for (std::size_t k = 0; k < A.master.m(); ++k) {
    const std::size_t p = A.master.edge(k).u, q = A.master.edge(k).v;
    EXPECT_EQ(rep.signs[p].at(A.subs[p].net.vertex(A.anchor(p, k)).id),
              rep.signs[q].at(A.subs[q].net.vertex(A.anchor(q, k)).id));
  }
}

TEST(AssemblyJson, RoundTripKeepsEverything) {
  for (const auto& name : assembly_catalog_names()) {
    const SubAssembly A = assembly_catalog(name, {});
    const SubAssembly B = assembly_from_json(json::parse(assembly_to_json(A).dump()));
    ASSERT_EQ(A.master.n(), B.master.n());
    ASSERT_EQ(A.master.m(), B.master.m());
    for (std::size_t p = 0; p < A.master.n(); ++p) {
      EXPECT_EQ(A.master.pos(p), B.master.pos(p));
      EXPECT_EQ(A.subs[p].anchors, B.subs[p].anchors);
      EXPECT_EQ(A.subs[p].net.positions(), B.subs[p].net.positions());
      EXPECT_EQ(A.subs[p].net.weights(), B.subs[p].net.weights());
    }
    EXPECT_EQ(A.master.weights(), B.master.weights());
    EXPECT_EQ(verify_assembly(A).summary(), verify_assembly(B).summary());
  }
}

TEST(SolveMaster, RejectsFailingAssembly) {
  const SubAssembly A = example_5_1(6);
  EXPECT_THROW(solve_master(A, 900.0, 60.0, zero_forces(A), table()), DomainError);
}

TEST(SolveMaster, RejectsMismatchedForces) {
  const SubAssembly A = example_5_1(7);
  SubForces f = zero_forces(A);
  f.pop_back();
  EXPECT_THROW(solve_master(A, 900.0, 60.0, f, table()), InputError);
}

TEST(SolveMaster, FrozenMasterAbsorbsNetForce) {
  const SubAssembly A = example_5_1(7);
  const SubForces f = small_forces(A, 0.03);
  MasterSolveOptions opt;
  opt.infinite_kappa = true;
  const auto r = solve_master(A, 1.0, 60.0, f, table(), opt);
  ASSERT_EQ(r.e_local.size(), A.master.n());
  for (std::size_t p = 0; p < A.master.n(); ++p) {
    cplx sum{};
    for (cplx x : f[p]) sum += x;
    EXPECT_LT(std::abs(r.e_local[p] + sum), 1e-9) << p;
  }
  EXPECT_LT(r.max_residual(), 1e-9);
  EXPECT_EQ(r.phi, A.master.positions());
}

TEST(SolveMaster, Example51ConvergesWithSmallResiduals) {
  const auto& r = solved_example();
  EXPECT_LT(r.max_residual(), 1e-9);
  const auto again = master_condition_residuals(r, table());
  for (double x : again) EXPECT_LT(x, 1e-9);
  for (std::size_t k = 0; k < r.a_tilde.size(); ++k)
    EXPECT_GT(r.a_tilde[k] * r.assembly.master.edge(k).weight, 0.0);
}

TEST(ScanKappa, SortedByPredictedChange) {
  const SubAssembly A = example_5_1(7);
  const auto s = scan_kappa(A, 60.0, zero_forces(A), table(), 880.0, 900.0, 2.0);
  ASSERT_EQ(s.size(), 11u);
  for (std::size_t i = 1; i < s.size(); ++i) EXPECT_LE(s[i - 1].predicted_weight_change, s[i].predicted_weight_change);
  EXPECT_THROW(scan_kappa(A, 60.0, zero_forces(A), table(), 900.0, 800.0, 1.0), DomainError);
}

TEST(GenerateCloud, CountMatchesPrediction) {
  const auto& r = solved_example();
  const auto c = generate_cloud(r, table());
  EXPECT_EQ(c.points.size(), predicted_point_count(r.assembly, r.m_map));
  std::size_t chain_pts = 0;
  for (const auto& p : c.points) chain_pts += p.kind == PointKind::chain;
  std::size_t expect = 0;
  for (long m : r.m_map) expect += std::size_t(2 * m - 1);
  EXPECT_EQ(chain_pts, expect);
}

TEST(GenerateCloud, PredictedCountForSingleEdge) {
  const WeightedNetwork master({{"a", {0.0, 0.0}}, {"b", {1.0, 0.0}}}, {{"a", "b", 1.0}});
  SubAssembly A{master, {singleton_sub(master, 0), singleton_sub(master, 1)}};
  EXPECT_EQ(predicted_point_count(A, {3}), 7u);
  EXPECT_EQ(predicted_point_count(A, {1}), 3u);
}

TEST(GenerateCloud, ChainsAreEvenlySpacedAndReachTheirEnds) {
  const auto& r = solved_example();
  const auto c = generate_cloud(r, table());
  const double tol = 1e-9 * c.ell;
  for (const auto& ch : c.chains) {
    std::vector<cplx> z{c.points[ch.start].pos};
    for (long j = 0; j < 2 * ch.m - 1; ++j) z.push_back(c.points[ch.first + std::size_t(j)].pos);
    z.push_back(c.points[ch.end].pos);
    ASSERT_EQ(z.size(), std::size_t(2 * ch.m + 1));
    for (std::size_t j = 1; j < z.size(); ++j) EXPECT_NEAR(std::abs(z[j] - z[j - 1]), ch.spacing, tol);
    EXPECT_NEAR(ch.spacing, c.ell * (1.0 - table().alpha(ch.weight, c.ell)), 1e-12 * c.ell);
  }
}

TEST(GenerateCloud, ChainSignsAlternateOnNegativeEdges) {
  const auto& r = solved_example();
  const auto c = generate_cloud(r, table());
  for (const auto& ch : c.chains) {
    const int eta = c.points[ch.start].sign;
    EXPECT_EQ(c.points[ch.end].sign, eta);
    for (long j = 1; j < 2 * ch.m; ++j) {
      const int s = c.points[ch.first + std::size_t(j - 1)].sign;
      EXPECT_EQ(s, ch.weight < 0.0 && j % 2 ? -eta : eta);
    }
  }
}

TEST(GenerateCloud, SubEdgesHaveTheirLengths) {
  const auto& r = solved_example();
  const auto c = generate_cloud(r, table());
  std::size_t base = 0;
  for (std::size_t p = 0; p < r.assembly.master.n(); ++p) {
    const auto& S = r.assembly.subs[p].net;
    for (std::size_t k = 0; k < S.m(); ++k) {
      const double d = std::abs(c.points[base + S.edge(k).v].pos - c.points[base + S.edge(k).u].pos);
      EXPECT_NEAR(d, c.ell - c.sub_lambda[p][k], 1e-9 * c.ell);
    }
    base += S.n();
  }
}

// Force balance recomputed from cloud geometry alone.
TEST(GenerateCloud, AnchorForcesMatchTargets) {
  const auto& r = solved_example();
  const auto c = generate_cloud(r, table());
  const auto& M = r.assembly.master;
  std::size_t base = 0;
  for (std::size_t p = 0; p < M.n(); ++p) {
    const auto& S = r.assembly.subs[p].net;
    std::vector<cplx> F(S.n());
    for (std::size_t k = 0; k < S.m(); ++k) {
      const auto& e = S.edge(k);
      const cplx u = unit(c.points[base + e.v].pos - c.points[base + e.u].pos);
      F[e.u] += r.sub_a[p][k] * u;
      F[e.v] -= r.sub_a[p][k] * u;
    }
    for (const auto& ch : c.chains) {
      const cplx d = unit(c.points[ch.end].pos - c.points[ch.start].pos);
      if (ch.start >= base && ch.start < base + S.n()) F[ch.start - base] += ch.weight * d;
      if (ch.end >= base && ch.end < base + S.n()) F[ch.end - base] -= ch.weight * d;
    }
    for (std::size_t i = 0; i < S.n(); ++i) EXPECT_LT(std::abs(F[i] - c.target[base + i]), 1e-8) << p << ":" << i;
    base += S.n();
  }
}

TEST(GenerateCloud, RejectsInfiniteKappa) {
  const SubAssembly A = example_5_1(7);
  MasterSolveOptions opt;
  opt.infinite_kappa = true;
  const auto r = solve_master(A, 1.0, 60.0, zero_forces(A), table(), opt);
  EXPECT_THROW(generate_cloud(r, table()), DomainError);
}

TEST(NeighborGraph, SolvedCloudHasExpectedNeighbors) {
  const auto& r = solved_example();
  const auto c = generate_cloud(r, table());
  const auto nb = neighbor_graph(c, table());
  EXPECT_TRUE(nb.ok()) << nb.violation_count << " " << nb.bad_interior << " " << nb.bad_anchor;
  for (std::size_t i = 0; i < c.points.size(); ++i) {
    if (c.points[i].kind == PointKind::chain) EXPECT_EQ(nb.neighbors[i].size(), 2u);
    else EXPECT_EQ(nb.neighbors[i].size(), c.sub_degree[i] + c.ray_count[i]);
  }
  const std::size_t o = r.assembly.master.index_of("o");
  std::size_t base = 0;
  for (std::size_t p = 0; p < o; ++p) base += r.assembly.subs[p].net.n();
  for (std::size_t j = 0; j < 7; ++j) EXPECT_EQ(nb.neighbors[base + j].size(), 3u);
  EXPECT_GT(nb.ell_min, 0.95 * c.ell);
  EXPECT_LT(nb.ell_min, 1.05 * c.ell);
}

TEST(NeighborGraph, HexagonAssemblyHasBandViolations) {
  const SubAssembly A = example_5_1(6);
  const auto c = generate_cloud(unperturbed(A, 900.5, 60.0), table());
  const auto nb = neighbor_graph(c, table());
  EXPECT_FALSE(nb.ok());
}

TEST(NeighborGraph, TwoPointsAreMutualNeighbors) {
  Configuration c;
  c.ell = 10.0;
  c.points = {{{0.0, 0.0}, 1, PointKind::anchor, "a"}, {{10.0, 0.0}, 1, PointKind::anchor, "b"}};
  c.sub_degree = {1, 1};
  c.ray_count = {0, 0};
  c.target = {cplx{}, cplx{}};
  const auto nb = neighbor_graph(c, table());
  EXPECT_DOUBLE_EQ(nb.ell_min, 10.0);
  EXPECT_EQ(nb.neighbors[0], std::vector<std::size_t>{1});
  EXPECT_EQ(nb.neighbors[1], std::vector<std::size_t>{0});
}

TEST(ChainMatrix, ClosedFormInverse) {
  for (long m = 1; m <= 50; ++m) {
    const Eigen::MatrixXd I = chain_matrix(m) * chain_matrix_inverse(m);
    EXPECT_LT((I - Eigen::MatrixXd::Identity(m, m)).cwiseAbs().maxCoeff(), 1e-12) << m;
  }
  EXPECT_THROW(chain_matrix(0), DomainError);
  EXPECT_THROW(chain_matrix_inverse(0), DomainError);
}

TEST(ChainMatrix, SmallCases) {
  EXPECT_DOUBLE_EQ(chain_matrix_inverse(1)(0, 0), 0.5);
  const auto x = apply_chain_inverse({0.0, 1.0, 0.0});
  EXPECT_NEAR(x[0], 0.5, 1e-15);
  EXPECT_NEAR(x[1], 1.0, 1e-15);
  EXPECT_NEAR(x[2], 0.5, 1e-15);
}

TEST(ChainMatrix, FastApplyMatchesDenseSolve) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> N;
  for (long m : {1L, 2L, 10L, 37L}) {
    std::vector<double> r(static_cast<std::size_t>(m));
    for (double& v : r) v = N(rng);
    const Eigen::VectorXd dense =
        chain_matrix(m).lu().solve(Eigen::Map<const Eigen::VectorXd>(r.data(), Eigen::Index(m)));
    const auto fast = apply_chain_inverse(r);
    for (long i = 0; i < m; ++i) EXPECT_NEAR(fast[std::size_t(i)], dense(i), 1e-11) << m;
  }
}

TEST(ChainMatrix, InverseIsPersymmetric) {
  for (long m : {3L, 8L, 21L}) {
    const Eigen::MatrixXd T = chain_matrix_inverse(m);
    for (long i = 0; i < m; ++i)
      for (long j = 0; j < m; ++j) {
        EXPECT_DOUBLE_EQ(T(i, j), T(j, i));
        EXPECT_NEAR(T(i, j), T(m - 1 - j, m - 1 - i), 1e-12);
      }
  }
}

TEST(ChainCorrect, ZeroResidualsGiveZeroOffsets) {
  const auto c = generate_cloud(solved_example(), table());
  const auto& ch = c.chains[0];
  const auto z = chain_correct(c, 0, std::vector<cplx>(std::size_t(2 * ch.m - 1)), table());
  ASSERT_EQ(z.size(), std::size_t(2 * ch.m + 1));
  for (cplx x : z) EXPECT_EQ(x, cplx{});
  EXPECT_THROW(chain_correct(c, 0, std::vector<cplx>(3), table()), InputError);
}

// A straight chain with equal spacing has zero balance sums; pushing one point by a
// small offset and correcting must bring it back to first order.
TEST(ChainCorrect, UndoesSmallDisplacement) {
  auto c = generate_cloud(solved_example(), table());
  const std::size_t idx = 0;
  const auto& ch = c.chains[idx];
  const auto before = chain_residuals(c, idx, table());
  const std::size_t j = std::size_t(ch.m);
  const cplx push = 1e-4 * (0.6 * ch.dir + 0.8 * cplx(0.0, 1.0) * ch.dir);
  c.points[ch.first + j - 1].pos += push;
  auto res = chain_residuals(c, idx, table());
  for (std::size_t i = 0; i < res.size(); ++i) res[i] -= before[i];
  const auto z = chain_correct(c, idx, res, table());
  apply_chain_offsets(c, idx, z);
  const auto after = chain_residuals(c, idx, table());
  double worst = 0.0, pushed = 0.0;
  for (std::size_t i = 0; i < after.size(); ++i) {
    worst = std::max(worst, std::abs(after[i] - before[i]));
    pushed = std::max(pushed, std::abs(res[i]));
  }
  EXPECT_LT(worst, 1e-3 * pushed);
}

TEST(ChainCorrect, BoundaryOffsetsRejected) {
  auto c = generate_cloud(solved_example(), table());
  const auto& ch = c.chains[0];
  std::vector<cplx> z(std::size_t(2 * ch.m + 1));
  z.front() = {1e-3, 0.0};
  EXPECT_THROW(apply_chain_offsets(c, 0, z), DomainError);
  z.pop_back();
  EXPECT_THROW(apply_chain_offsets(c, 0, z), InputError);
}
