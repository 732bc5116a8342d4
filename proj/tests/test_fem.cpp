#include "rlra/fem.hpp"

#include <cmath>

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include "rlra/weighted_svd.hpp"
#include "support/oracles.hpp"

namespace rlra {
namespace {

TEST(Fem, KlModeOrdering) {
  KlMode m1 = kl_mode(1);
  EXPECT_EQ(m1.k, 1);
  EXPECT_EQ(m1.l, 1);
  EXPECT_DOUBLE_EQ(m1.amplitude, 0.5);
  KlMode m2 = kl_mode(2);
  EXPECT_EQ(m2.k, 1);
  EXPECT_EQ(m2.l, 2);
  EXPECT_DOUBLE_EQ(m2.amplitude, 0.2);
  KlMode m3 = kl_mode(3);
  EXPECT_EQ(m3.k, 2);
  EXPECT_EQ(m3.l, 1);
  EXPECT_DOUBLE_EQ(m3.amplitude, 0.2);
  KlMode m4 = kl_mode(4);
  EXPECT_EQ(m4.k, 1);
  EXPECT_EQ(m4.l, 3);
  EXPECT_DOUBLE_EQ(m4.amplitude, 0.1);
  // k+l stays nondecreasing far out.
  Index prev = 2;
  for (Index j = 1; j <= 50; ++j) {
    KlMode m = kl_mode(j);
    EXPECT_GE(m.k + m.l, prev);
    prev = m.k + m.l;
  }
}

TEST(Fem, StiffnessFivePointStencil) {
  StructuredGrid grid(3);
  SparseSymMatrix a = assemble_stiffness(grid, [](double, double) { return 1.0; });
  Matrix d = Matrix(a.mat);
  ASSERT_EQ(d.rows(), 9);
  // Center node 4 couples to 1, 3, 5, 7.
  EXPECT_DOUBLE_EQ(d(4, 4), 4.0);
  EXPECT_DOUBLE_EQ(d(4, 1), -1.0);
  EXPECT_DOUBLE_EQ(d(4, 3), -1.0);
  EXPECT_DOUBLE_EQ(d(4, 5), -1.0);
  EXPECT_DOUBLE_EQ(d(4, 7), -1.0);
  // Exactly no diagonal coupling.
  EXPECT_EQ(d(4, 0), 0.0);
  EXPECT_EQ(d(4, 2), 0.0);
  EXPECT_EQ(d(4, 6), 0.0);
  EXPECT_EQ(d(4, 8), 0.0);
  // Every diagonal entry is 4 regardless of boundary adjacency, and entries
  // are h-independent.
  for (Index i = 0; i < 9; ++i) EXPECT_DOUBLE_EQ(d(i, i), 4.0);
  SparseSymMatrix a7 = assemble_stiffness(StructuredGrid(7), [](double, double) { return 1.0; });
  EXPECT_DOUBLE_EQ(Matrix(a7.mat)(24, 24), 4.0);

  // Solve residual on the assembled matrix.
  SpdFactorization f(a);
  Vector ones = Vector::Ones(9);
  EXPECT_LE((a.mat * f.solve(ones) - ones).norm(), 1e-12);
}

TEST(Fem, ModeStiffnessBounded) {
  StructuredGrid grid(7);
  SparseSymMatrix a0 = assemble_stiffness(grid, [](double, double) { return 1.0; });
  KlMode mode = kl_mode(1);
  SparseSymMatrix a1 =
      assemble_stiffness(grid, [&](double x1, double x2) { return mode.eval(x1, x2); });
  validate_symmetric(a1);
  Eigen::SelfAdjointEigenSolver<Matrix> e0(Matrix(a0.mat));
  Eigen::SelfAdjointEigenSolver<Matrix> e1(Matrix(a1.mat));
  const double n0 = e0.eigenvalues().cwiseAbs().maxCoeff();
  const double n1 = e1.eigenvalues().cwiseAbs().maxCoeff();
  EXPECT_LE(n1, 0.5 * n0 + 1e-12);
}

TEST(Fem, MassLumpUniform) {
  StructuredGrid grid(3);
  Vector w = mass_lump(grid);
  ASSERT_EQ(w.size(), 9);
  for (Index i = 0; i < 9; ++i) EXPECT_NEAR(w(i), 1.0 / 16.0, 1e-15);
  Vector w15 = mass_lump(StructuredGrid(15));
  EXPECT_LE(w15.sum(), 1.0);
  EXPECT_NEAR(w15.sum(), std::pow(15.0 / 16.0, 2.0), 1e-12);
}

TEST(Fem, LoadOfConstantForcingIsLumpedWeights) {
  StructuredGrid grid(5);
  const double c = 3.25;
  Vector load = assemble_load_column(grid, [&](double, double) { return c; });
  Vector w = mass_lump(grid);
  EXPECT_LT((load - c * w).norm(), 1e-14);
}

TEST(Fem, RhsConstantForcingRankOne) {
  StructuredGrid grid(5);
  SampleSet s = sample_parameters(12, 2, 7);
  FactoredAmbient b = assemble_rhs_with(
      grid, s, [](double, double, const Vector&) { return 2.0; }, 1e-12);
  EXPECT_EQ(b.width(), 1);
  Vector w = mass_lump(grid);
  // Left factor proportional to the lumped weights.
  Matrix bd = b.dense();
  Vector col0 = bd.col(0);
  const double scale = col0(0) / w(0);
  EXPECT_LT((col0 - scale * w).norm(), 1e-12 * col0.norm());
  for (Index j = 1; j < s.n(); ++j) EXPECT_LT((bd.col(j) - col0).norm(), 1e-12 * col0.norm());
}

TEST(Fem, RhsSingleSampleRankOne) {
  StructuredGrid grid(7);
  SampleSet s = sample_parameters(1, 2, 19);
  FactoredAmbient b = assemble_rhs(grid, s, 1e-12);
  EXPECT_EQ(b.width(), 1);
  Vector direct = assemble_load_column(grid, [&](double x1, double x2) {
    return forcing_value(x1, x2, s.samples(0, 0), s.samples(1, 0));
  });
  EXPECT_LT((b.dense().col(0) - direct).norm(), 1e-12 * direct.norm());
}

TEST(Fem, RhsCompressionReproducesColumns) {
  StructuredGrid grid(15);
  SampleSet s = sample_parameters(256, 4, 31);
  Metric g = Metric::preconditioned(
      spd_factorize(assemble_stiffness(grid, [](double, double) { return 1.0; })), s.weights);
  FactoredAmbient b = assemble_rhs(grid, s, 1e-12, &g);
  EXPECT_LE(b.width(), 200);

  Matrix dense(grid.node_count(), s.n());
  for (Index j = 0; j < s.n(); ++j)
    dense.col(j) = assemble_load_column(grid, [&](double x1, double x2) {
      return forcing_value(x1, x2, s.samples(0, j), s.samples(1, j));
    });
  Matrix k = Matrix(g.kfac()->matrix());
  const double total = testing::dense_p_norm(dense, k, g.xi0());
  EXPECT_LE(testing::dense_p_norm(b.dense() - dense, k, g.xi0()), 1e-12 * total);
  // Every single column reproduced to the tolerance.
  for (Index j = 0; j < s.n(); ++j) {
    Vector diff = b.dense().col(j) - dense.col(j);
    EXPECT_LE(std::sqrt(diff.dot(k * diff)), 1e-11 * total);
  }
}

TEST(Fem, RhsRequiresTwoParameters) {
  StructuredGrid grid(3);
  SampleSet s = sample_parameters(4, 1, 3);
  EXPECT_THROW(assemble_rhs(grid, s, 1e-12), Error);
  EXPECT_THROW(build_fem_problem(3, 4, 1, 3, FemVariant::Linear), Error);
}

TEST(Fem, CoefficientPositivityKeepsSpd) {
  ProblemData pd = build_fem_problem(7, 24, 3, 123, FemVariant::Linear);
  for (Index j = 0; j < pd.samples.n(); ++j) {
    SparseSymMatrix a = affine_combine(pd.op, pd.samples.samples.col(j));
    EXPECT_NO_THROW(SpdFactorization f(a)) << "sample " << j;
  }
}

TEST(Fem, BuildProblemShapes) {
  ProblemData pd = build_fem_problem(7, 32, 4, 11, FemVariant::CubicReaction);
  EXPECT_EQ(pd.rows(), 49);
  EXPECT_EQ(pd.cols(), 32);
  EXPECT_EQ(pd.op.p(), 4);
  EXPECT_TRUE(pd.nonlinearity.active());
  EXPECT_EQ(pd.nonlinearity.w.size(), 49);
  EXPECT_NEAR(pd.nonlinearity.w(0), 1.0 / 64.0, 1e-15);
  Metric g = pd.metric();
  EXPECT_EQ(g.rows(), 49);
  EXPECT_EQ(g.cols(), 32);
  // Same seed, same problem.
  ProblemData pd2 = build_fem_problem(7, 32, 4, 11, FemVariant::CubicReaction);
  EXPECT_EQ(pd.samples.samples, pd2.samples.samples);
  EXPECT_LT((pd.b.dense() - pd2.b.dense()).norm(), 1e-15);
}

TEST(Fem, GalerkinSecondOrderConvergence) {
  // Nested grids: N=7 (h=1/8), N=15 (h=1/16) against an N=63 (h=1/64)
  // reference, one fixed parameter value; relative H1-seminorm error at the
  // coarse nodes should shrink at order h^2 (superconvergent nodal rates on
  // the uniform mesh).
  SampleSet s = sample_parameters(1, 2, 42);
  const Vector xi = s.samples.col(0);

  auto solve_on = [&](Index n_side) {
    StructuredGrid grid(n_side);
    AffineOperator op;
    op.terms.push_back(assemble_stiffness(grid, [](double, double) { return 1.0; }));
    for (Index i = 1; i <= 2; ++i) {
      KlMode m = kl_mode(i);
      op.terms.push_back(

          assemble_stiffness(grid, [&m](double x1, double x2) { return m.eval(x1, x2); }));
    }
    Vector load = assemble_load_column(grid, [&](double x1, double x2) {
      return forcing_value(x1, x2, xi(0), xi(1));
    });
    SpdFactorization f(affine_combine(op, xi));
    return Vector(f.solve(load));
  };

  Vector ref = solve_on(63);
  StructuredGrid fine(63);

  auto error_on = [&](Index n_side) {
    StructuredGrid grid(n_side);
    Vector x = solve_on(n_side);
    // Restrict the reference to the coarse nodes (they are nested).
    const Index stride = (fine.n_side + 1) / (n_side + 1);
    Vector restricted(grid.node_count());
    for (Index iy = 0; iy < n_side; ++iy)
      for (Index ix = 0; ix < n_side; ++ix) {
        const Index fx = (ix + 1) * stride - 1;
        const Index fy = (iy + 1) * stride - 1;
        restricted(grid.node_index(ix, iy)) = ref(fine.node_index(fx, fy));
      }
    SparseSymMatrix k = assemble_stiffness(grid, [](double, double) { return 1.0; });
    Vector d = x - restricted;
    return std::sqrt(d.dot(k.mat * d) / restricted.dot(k.mat * restricted));
  };

  const double e7 = error_on(7);
  const double e15 = error_on(15);
  const double rate = std::log(e7 / e15) / std::log(2.0);
  EXPECT_GT(rate, 1.6);
  EXPECT_LT(rate, 2.6);
}

}  // namespace
}  // namespace rlra
