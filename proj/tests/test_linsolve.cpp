#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "acflow/assemble.hpp"
#include "acflow/linsolve.hpp"
#include "acflow/operators.hpp"
#include "test_util.hpp"

using namespace acflow;
using acflow::testing::random_faces;

namespace {

SparseOperator identity(std::size_t n) {
  SparseOperator::Builder b(n);
  for (std::size_t i = 0; i < n; ++i) b.add(i, i, 1.0);
  return std::move(b).build(true);
}

/// Matrix-free action of the momentum operator on a no-slip field.
FaceField momentum_action(const FaceField& u_star, const FaceField& v, double k, double eps, double nu) {
  FaceField out = (1.0 / k) * v + advect_skew(u_star, v) - (k / eps) * grad_div(v) - nu * laplacian(v);
  return out.enforce_no_slip();
}

double vnorm(const std::vector<double>& v) { return std::sqrt(detail::dot(v, v)); }

}  // namespace

TEST(SparseOperator, BuilderSortsAndMergesDuplicates) {
  SparseOperator::Builder b(3);
  b.add(0, 2, 1.0);
  b.add(0, 0, 2.0);
  b.add(0, 2, 0.5);
  b.add(2, 1, -1.0);
  const SparseOperator A = std::move(b).build();
  EXPECT_EQ(A.dim(), 3u);
  EXPECT_EQ(A.nonzeros(), 3u);
  EXPECT_EQ(A.coeff(0, 2), 1.5);
  EXPECT_EQ(A.coeff(0, 0), 2.0);
  EXPECT_EQ(A.coeff(1, 1), 0.0);
  EXPECT_EQ(A.cols()[0], 0u);
  EXPECT_THROW(SparseOperator::Builder(2).add(2, 0, 1.0), std::out_of_range);
}

TEST(Solve, IdentityReturnsRhs) {
  const SparseOperator I = identity(7);
  const std::vector<double> b{1, -2, 3, 4, 5, 6, 7};
  for (auto pc : {Preconditioner::none, Preconditioner::diagonal, Preconditioner::ilu0}) {
    SolveConfig cfg;
    cfg.preconditioner = pc;
    const auto x = solve(I, b, cfg);
    for (std::size_t i = 0; i < b.size(); ++i) EXPECT_NEAR(x[i], b[i], 1e-14);
  }
}

TEST(Solve, DiagonalSystem) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> d(0.5, 4.0);
  const std::size_t n = 50;
  SparseOperator::Builder b(n);
  std::vector<double> diag(n), rhs(n);
  for (std::size_t i = 0; i < n; ++i) {
    diag[i] = d(rng);
    rhs[i] = d(rng) - 2.0;
    b.add(i, i, diag[i]);
  }
  const SparseOperator A = std::move(b).build(true);
  for (auto kind : {SolverKind::gmres, SolverKind::direct}) {
    SolveConfig cfg;
    cfg.kind = kind;
    cfg.preconditioner = Preconditioner::none;
    const auto x = solve(A, rhs, cfg);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(x[i], rhs[i] / diag[i], 1e-10 * std::abs(rhs[i] / diag[i]) + 1e-15);
  }
}

TEST(Solve, ZeroRhsGivesZero) {
  const SparseOperator I = identity(4);
  std::vector<double> x{1, 2, 3, 4};
  const std::vector<double> b(4, 0.0);
  solve(I, b, x);
  for (double v : x) EXPECT_EQ(v, 0.0);
}

TEST(Solve, DimensionMismatchThrows) {
  const SparseOperator I = identity(4);
  EXPECT_THROW(solve(I, std::vector<double>(3, 1.0)), std::invalid_argument);
}

TEST(Solve, InvalidConfigThrows) {
  SolveConfig cfg;
  cfg.rel_tol = 1.5;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.max_iter = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(Solve, NonConvergenceCarriesResidual) {
  const MacGrid g(16, 16, 1.0, 1.0);
  std::mt19937_64 rng(5);
  const SparseOperator A = assemble_momentum(g, random_faces(g, rng), 0.05, 1e-4, 0.01);
  const FaceIndex idx(g);
  const auto b = idx.pack(random_faces(g, rng));
  SolveConfig cfg;
  cfg.kind = SolverKind::gmres;
  cfg.preconditioner = Preconditioner::none;
  cfg.max_iter = 3;
  cfg.restart = 3;
  try {
    solve(A, b, cfg);
    FAIL() << "expected NonConvergence";
  } catch (const NonConvergence& e) {
    EXPECT_GT(e.achieved_residual(), cfg.rel_tol);
    EXPECT_EQ(e.iterations(), 3);
  }
}

TEST(Assemble, RejectsNonpositiveParameters) {
  const MacGrid g(8, 8, 1.0, 1.0);
  const FaceField z(g);
  EXPECT_THROW(assemble_momentum(g, z, 0.0, 1.0, 1.0), std::invalid_argument);
  EXPECT_THROW(assemble_momentum(g, z, 1.0, -1.0, 1.0), std::invalid_argument);
  EXPECT_THROW(assemble_momentum(g, z, 1.0, 1.0, 0.0), std::invalid_argument);
}

TEST(Assemble, MatchesMatrixFreeComposition) {
  std::mt19937_64 rng(7);
  for (int n : {8, 16, 32}) {
    const MacGrid g(n, n + 2, 1.0, 1.2);
    const FaceIndex idx(g);
    for (int r = 0; r < 5; ++r) {
      const FaceField w = random_faces(g, rng), v = random_faces(g, rng);
      const SparseOperator A = assemble_momentum(g, w, 0.013, 3e-3, 0.2);
      const auto Av = A.apply(idx.pack(v));
      const auto ref = idx.pack(momentum_action(w, v, 0.013, 3e-3, 0.2));
      std::vector<double> diff(Av.size());
      for (std::size_t i = 0; i < Av.size(); ++i) diff[i] = Av[i] - ref[i];
      EXPECT_LE(vnorm(diff), 1e-13 * vnorm(ref));
    }
  }
}

TEST(Assemble, RowSumsMatchActionOnOnes) {
  const MacGrid g(12, 10, 1.0, 1.0);
  std::mt19937_64 rng(8);
  const FaceField w = random_faces(g, rng);
  const SparseOperator A = assemble_momentum(g, w, 0.1, 1e-2, 0.5);
  const FaceIndex idx(g);
  FaceField ones(g, 1.0);
  ones.enforce_no_slip();
  const auto ref = idx.pack(momentum_action(w, ones, 0.1, 1e-2, 0.5));
  for (std::size_t r = 0; r < A.dim(); ++r) {
    double s = 0.0;
    for (std::size_t q = A.row_ptr()[r]; q < A.row_ptr()[r + 1]; ++q) s += A.values()[q];
    EXPECT_NEAR(s, ref[r], 1e-10 * (1.0 + std::abs(ref[r])));
  }
}

TEST(Assemble, StillTransportIsSymmetricPositiveDefinite) {
  const MacGrid g(10, 10, 1.0, 1.0);
  const SparseOperator A = assemble_momentum(g, FaceField(g), 0.1, 1e-3, 1.0);
  EXPECT_TRUE(A.symmetric());
  EXPECT_TRUE(A.is_symmetric(1e-14));
  std::mt19937_64 rng(9);
  const FaceIndex idx(g);
  for (int r = 0; r < 10; ++r) {
    const auto v = idx.pack(random_faces(g, rng));
    EXPECT_GT(detail::dot(v, A.apply(v)), 0.0);
  }
}

TEST(Assemble, PackUnpackRoundTrip) {
  const MacGrid g(9, 7, 1.0, 1.0);
  std::mt19937_64 rng(10);
  const FaceField u = random_faces(g, rng);
  const FaceIndex idx(g);
  EXPECT_EQ(norm(idx.unpack(idx.pack(u)) - u), 0.0);
}

class ManufacturedSystem : public ::testing::TestWithParam<std::tuple<SolverKind, Preconditioner, double>> {};

TEST_P(ManufacturedSystem, RecoversKnownSolution) {
  const auto [kind, pc, eps] = GetParam();
  const MacGrid g(32, 32, 1.0, 1.0);
  std::mt19937_64 rng(21);
  const FaceField w = random_faces(g, rng);
  const SparseOperator A = assemble_momentum(g, w, 0.02, eps, 0.01);
  const FaceIndex idx(g);
  const auto x_known = idx.pack(random_faces(g, rng));
  const auto b = A.apply(x_known);
  SolveConfig cfg;
  cfg.kind = kind;
  cfg.preconditioner = pc;
  std::vector<double> x;
  const SolveStats st = solve(A, b, x, cfg);
  EXPECT_LE(st.relative_residual, cfg.rel_tol);
  std::vector<double> r(b.size());
  EXPECT_LE(detail::residual_norm(A, x, b, r), cfg.rel_tol * vnorm(b));
}

INSTANTIATE_TEST_SUITE_P(Solvers, ManufacturedSystem,
                         ::testing::Values(std::tuple{SolverKind::gmres, Preconditioner::diagonal, 1e-2},
                                           std::tuple{SolverKind::gmres, Preconditioner::diagonal, 1e-1},
                                           std::tuple{SolverKind::direct, Preconditioner::none, 1e-2},
                                           std::tuple{SolverKind::direct, Preconditioner::none, 1e-6}));

TEST(Solve, Ilu0OnConvectionDiffusionMatrix) {
  // five-point convection-diffusion M-matrix: ILU(0) must beat Jacobi
  const int m = 30;
  const std::size_t n = static_cast<std::size_t>(m) * m;
  SparseOperator::Builder b(n);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i) {
      const std::size_t r = static_cast<std::size_t>(i + m * j);
      b.add(r, r, 4.2);
      if (i > 0) b.add(r, r - 1, -1.3);
      if (i + 1 < m) b.add(r, r + 1, -0.7);
      if (j > 0) b.add(r, r - m, -1.0);
      if (j + 1 < m) b.add(r, r + m, -1.0);
    }
  const SparseOperator A = std::move(b).build();
  const std::vector<double> rhs(n, 1.0);
  int iters[2] = {0, 0};
  int q = 0;
  for (auto pc : {Preconditioner::diagonal, Preconditioner::ilu0}) {
    SolveConfig cfg;
    cfg.kind = SolverKind::gmres;
    cfg.preconditioner = pc;
    std::vector<double> x;
    iters[q++] = solve(A, rhs, x, cfg).iterations;
  }
  EXPECT_LT(iters[1], iters[0]);
}

TEST(Solve, DeterministicForFixedInput) {
  const MacGrid g(16, 16, 1.0, 1.0);
  std::mt19937_64 rng(31);
  const SparseOperator A = assemble_momentum(g, random_faces(g, rng), 0.01, 1e-2, 0.1);
  const FaceIndex idx(g);
  const auto b = idx.pack(random_faces(g, rng));
  EXPECT_EQ(solve(A, b), solve(A, b));
  SolveConfig cfg;
  cfg.kind = SolverKind::gmres;
  EXPECT_EQ(solve(A, b, cfg), solve(A, b, cfg));
}
