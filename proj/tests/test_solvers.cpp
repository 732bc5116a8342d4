#include "rlra/solvers.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "support/oracles.hpp"
#include "support/synthetic.hpp"

namespace rlra {
namespace {

using testing::SyntheticProblem;

// Dense per-column solves A(xi_j) x_j = b_j, the snapshot every linear solver
// test compares against.
Matrix dense_snapshot(const ProblemData& pd) {
  Matrix out(pd.rows(), pd.cols());
  const Matrix b = pd.b.dense();
  for (Index j = 0; j < pd.cols(); ++j) {
    SparseSymMatrix aj = affine_combine(pd.op, pd.samples.samples.col(j));
    out.col(j) = Matrix(aj.mat).ldlt().solve(b.col(j));
  }
  return out;
}

FixedRankPoint truncate_dense(const Matrix& x, const Metric& g, Index r) {
  FactoredAmbient z(x, Matrix::Identity(x.cols(), x.cols()));
  return weighted_truncated_svd(z, g, TruncationTarget::by_rank(r));
}

double p_distance(const FixedRankPoint& x, const Matrix& ref, const testing::DenseProblem& dp) {
  return testing::dense_p_norm(x.dense() - ref, dp.k, dp.xi[0]);
}

// Scalar golden-section minimizer on [lo, hi].
double golden_minimize(const std::function<double(double)>& f, double lo, double hi) {
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - gr * (b - a), d = a + gr * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 200; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

// Problem whose exact solution is a prescribed decaying-spectrum matrix:
// b_j = A(xi_j) xtilde_j.
struct PlantedProblem {
  SyntheticProblem s;
  Matrix solution;
  Vector sigma;
};

PlantedProblem planted_solution_problem(Index m, Index n, Index p, const Vector& sig,
                                        SplitMix64& rng) {
  PlantedProblem out;
  out.s = testing::random_problem(m, n, p, false, rng, 1);
  Metric g = out.s.pd.metric();
  FixedRankPoint xt = random_point(g, sig.size(), rng);
  xt.sigma = sig;
  out.solution = xt.dense();
  out.sigma = sig;
  Matrix bd(m, n);
  for (Index j = 0; j < n; ++j) {
    SparseSymMatrix aj = affine_combine(out.s.pd.op, out.s.pd.samples.samples.col(j));
    bd.col(j) = aj.mat * out.solution.col(j);
  }
  out.s.pd.b = FactoredAmbient(bd, Matrix::Identity(n, n));
  out.s.dp.b = bd;
  return out;
}

TEST(SolverConfig, DocumentedDefaults) {
  RcgConfig rcg;
  EXPECT_DOUBLE_EQ(rcg.tol, 1e-6);
  EXPECT_EQ(rcg.max_iters, 1000);
  EXPECT_DOUBLE_EQ(rcg.armijo_c, 1e-4);
  EXPECT_DOUBLE_EQ(rcg.backtrack, 0.5);
  EXPECT_EQ(rcg.max_backtracks, 50);
  RtrConfig rtr;
  EXPECT_DOUBLE_EQ(rtr.delta1, 1.0);
  EXPECT_DOUBLE_EQ(rtr.delta_max, 1e3);
  EXPECT_DOUBLE_EQ(rtr.accept_rho, 0.05);
  EXPECT_DOUBLE_EQ(rtr.expand_rho, 0.75);
  EXPECT_DOUBLE_EQ(rtr.shrink_rho, 0.25);
  EXPECT_DOUBLE_EQ(rtr.tcg_kappa, 0.1);
  EXPECT_DOUBLE_EQ(rtr.tcg_theta, 1.0);
  EXPECT_EQ(rtr.max_inner, 500);
  EXPECT_DOUBLE_EQ(rtr.warmup_grad_tol, 1e-3);
  RankAdaptiveConfig ra;
  EXPECT_DOUBLE_EQ(ra.epsilon, 1e-14);
  EXPECT_GE(ra.rank_increase, 1);
}

TEST(FletcherReeves, HandValues) {
  EXPECT_DOUBLE_EQ(fletcher_reeves_beta(3.0, 2.0), 2.25);
  EXPECT_DOUBLE_EQ(fletcher_reeves_beta(0.7, 0.7), 1.0);
  EXPECT_DOUBLE_EQ(fletcher_reeves_beta(0.0, 1.0), 0.0);
  EXPECT_THROW(fletcher_reeves_beta(1.0, 0.0), InvariantViolation);
}

TEST(Armijo, AcceptsFirstTrialOnExactMinimizer) {
  auto f = [](double a) { return (a - 2.0) * (a - 2.0); };
  ArmijoResult r = armijo_linesearch(f, 4.0, -4.0, 2.0, RcgConfig{});
  EXPECT_DOUBLE_EQ(r.alpha, 2.0);
  EXPECT_EQ(r.evaluations, 1);
  EXPECT_DOUBLE_EQ(r.f_new, 0.0);
}

TEST(Armijo, HandBacktrackExample) {
  // f(alpha) = (alpha - 1)^2 from f0 = 1, g0 = -2: alpha = 4 and 2 fail the
  // sufficient-decrease test, alpha = 1 lands on the minimizer.
  auto f = [](double a) { return (a - 1.0) * (a - 1.0); };
  ArmijoResult r = armijo_linesearch(f, 1.0, -2.0, 4.0, RcgConfig{});
  EXPECT_DOUBLE_EQ(r.alpha, 1.0);
  EXPECT_EQ(r.evaluations, 3);
  EXPECT_DOUBLE_EQ(r.f_new, 0.0);
}

TEST(Armijo, AscentDirectionAborts) {
  auto f = [](double a) { return a; };
  EXPECT_DEATH(armijo_linesearch(f, 0.0, 1.0, 1.0, RcgConfig{}), "descent");
}

TEST(Armijo, ThrowsWhenBacktracksExhausted) {
  // f increases along the ray, so no step can satisfy the Armijo condition.
  auto f = [](double a) { return 1.0 + a; };
  RcgConfig cfg;
  cfg.max_backtracks = 8;
  EXPECT_THROW(armijo_linesearch(f, 1.0, -1.0, 1.0, cfg), LineSearchStalled);
}

struct TcgFixture : public ::testing::Test {
  void SetUp() override {
    SplitMix64 rng(401);
    s = testing::random_problem(6, 5, 0, false, rng, 2);
    g = std::make_unique<Metric>(s.pd.metric());
    Matrix xs = dense_snapshot(s.pd);
    x = std::make_unique<FixedRankPoint>(truncate_dense(xs, *g, 2));
    // Nudge off the exact solution so the gradient is nonzero but the
    // Hessian stays positive definite.
    TangentVector dx = random_tangent(*x, *g, 1e-2, rng);
    *x = retract(*x, dx, *g);
    amb = euclid_gradient(s.pd, *g, *x);
    grad = std::make_unique<TangentVector>(project_tangent(*x, amb, *g));
  }

  HessianApply true_hessian() {
    return [this](const TangentVector& t) {
      return riemannian_hessian(s.pd, *g, *x, t, amb);
    };
  }

  SyntheticProblem s;
  std::unique_ptr<Metric> g;
  std::unique_ptr<FixedRankPoint> x;
  FactoredAmbient amb;
  std::unique_ptr<TangentVector> grad;
};

TEST_F(TcgFixture, MetricIdentityHessianConvergesInOneIteration) {
  HessianApply id = [](const TangentVector& t) { return t; };
  const double gn = norm(*grad, *g);
  TcgResult r = tcg_subproblem(*grad, id, 1e9, 0.1, 1.0, 50, *g);
  EXPECT_EQ(r.stop, TcgStop::Converged);
  EXPECT_EQ(r.iterations, 1);
  TangentVector diff = r.eta + *grad;  // eta should equal -grad
  EXPECT_LE(norm(diff, *g), 1e-12 * gn);
  EXPECT_NEAR(r.model_decrease, 0.5 * gn * gn, 1e-10 * gn * gn);
}

TEST_F(TcgFixture, NegativeCurvatureStopsExactlyOnBoundary) {
  HessianApply neg = [](const TangentVector& t) { return -1.0 * t; };
  const double delta = 0.37;
  TcgResult r = tcg_subproblem(*grad, neg, delta, 0.1, 1.0, 50, *g);
  EXPECT_EQ(r.stop, TcgStop::NegativeCurvature);
  EXPECT_NEAR(norm(r.eta, *g), delta, 1e-12 * delta);
  EXPECT_GT(r.model_decrease, 0.0);
}

TEST_F(TcgFixture, SmallRadiusStopsOnBoundary) {
  const double gn = norm(*grad, *g);
  const double delta = 0.05 * gn;
  TcgResult r = tcg_subproblem(*grad, true_hessian(), delta, 0.1, 1.0, 200, *g);
  EXPECT_TRUE(r.stop == TcgStop::Boundary || r.stop == TcgStop::NegativeCurvature);
  EXPECT_NEAR(norm(r.eta, *g), delta, 1e-12 * delta);
  EXPECT_GE(r.model_decrease, 0.0);
}

// With an effectively infinite radius and a tight residual target, tCG must
// reproduce the Newton step; the oracle solves the same subproblem densely in
// an explicit P-orthonormal tangent basis.
TEST_F(TcgFixture, LargeRadiusMatchesDenseNewtonOracle) {
  const Index m = x->rows(), n = x->cols(), r = x->rank();
  const Matrix k = s.dp.k;
  const Vector xi0 = s.dp.xi[0];

  // K-orthonormal complement of U and Xi0-orthonormal complement of V.
  SplitMix64 rng(402);
  auto complement = [&](const Matrix& basis, const Matrix& weight, const Vector& diag,
                        bool use_diag) {
    const Index dim = basis.rows();
    const Index extra = dim - basis.cols();
    Matrix q(dim, extra);
    auto wdot = [&](const Vector& a, const Vector& b) {
      return use_diag ? a.dot(diag.asDiagonal() * b) : a.dot(weight * b);
    };
    for (Index j = 0; j < extra; ++j) {
      Vector v = testing::random_matrix(dim, 1, rng);
      for (int pass = 0; pass < 2; ++pass) {
        for (Index c = 0; c < basis.cols(); ++c)
          v -= wdot(basis.col(c), v) * basis.col(c);
        for (Index c = 0; c < j; ++c) v -= wdot(q.col(c), v) * q.col(c);
      }
      q.col(j) = v / std::sqrt(wdot(v, v));
    }
    return q;
  };
  Matrix uperp = complement(x->U, k, xi0, false);
  Matrix vperp = complement(x->V, k, xi0, true);

  std::vector<TangentVector> basis;
  auto push = [&](Matrix mm, Matrix up, Matrix vp) {
    TangentVector t;
    t.anchor = x.get();
    t.M = std::move(mm);
    t.Up = std::move(up);
    t.Vp = std::move(vp);
    basis.push_back(std::move(t));
  };
  const Matrix zm = Matrix::Zero(r, r), zu = Matrix::Zero(m, r), zv = Matrix::Zero(n, r);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < r; ++j) {
      Matrix e = zm;
      e(i, j) = 1.0;
      push(e, zu, zv);
    }
  for (Index i = 0; i < m - r; ++i)
    for (Index j = 0; j < r; ++j) {
      Matrix up = zu;
      up.col(j) = uperp.col(i);
      push(zm, up, zv);
    }
  for (Index i = 0; i < n - r; ++i)
    for (Index j = 0; j < r; ++j) {
      Matrix vp = zv;
      vp.col(j) = vperp.col(i);
      push(zm, zu, vp);
    }
  const Index d = static_cast<Index>(basis.size());
  ASSERT_EQ(d, r * (m + n - r));
  // The basis must be P-orthonormal for coefficient extraction by inner
  // products.
  for (Index a = 0; a < d; ++a)
    for (Index b = a; b < d; ++b) {
      const double dot = inner(basis[a], basis[b], *g);
      EXPECT_NEAR(dot, a == b ? 1.0 : 0.0, 1e-10);
    }

  HessianApply hess = true_hessian();
  Matrix hd(d, d);
  Vector gvec(d);
  for (Index a = 0; a < d; ++a) {
    gvec(a) = inner(basis[a], *grad, *g);
    TangentVector ha = hess(basis[a]);
    for (Index b = 0; b < d; ++b) hd(b, a) = inner(basis[b], ha, *g);
  }
  Eigen::LLT<Matrix> llt(0.5 * (hd + hd.transpose()));
  ASSERT_EQ(llt.info(), Eigen::Success);
  Vector eta_star = -llt.solve(gvec);

  TcgResult tr = tcg_subproblem(*grad, hess, 1e9, 1e-8, 1.0, 400, *g);
  EXPECT_EQ(tr.stop, TcgStop::Converged);
  Vector eta_coef(d);
  for (Index a = 0; a < d; ++a) eta_coef(a) = inner(basis[a], tr.eta, *g);
  EXPECT_LE((eta_coef - eta_star).norm(), 1e-6 * eta_star.norm());
  // The tracked model decrease matches the dense quadratic's decrease.
  const double md_star = -(gvec.dot(eta_star) + 0.5 * eta_star.dot(hd * eta_star));
  EXPECT_NEAR(tr.model_decrease, md_star, 1e-6 * std::abs(md_star));
}

TEST(NormalCorrection, AlphaMatchesGoldenSectionScan) {
  SplitMix64 rng(411);
  SyntheticProblem s = testing::random_problem(7, 6, 2, false, rng, 4);
  Metric g = s.pd.metric();
  FixedRankPoint x = random_point(g, 2, rng);
  NormalCorrection nc = normal_correction(s.pd, g, x, 2);
  ASSERT_FALSE(nc.zero);

  const Matrix xd = x.dense();
  const Matrix yd = nc.y.dense();
  auto q = [&](double a) { return testing::dense_functional(s.dp, xd + a * yd); };
  // Bracket the minimizer, then golden-section to high accuracy.
  double hi = 1.0;
  while (q(hi) < q(0.5 * hi)) hi *= 2.0;
  const double a_star = golden_minimize(q, 0.0, hi);
  EXPECT_GT(nc.alpha, 0.0);
  EXPECT_NEAR(nc.alpha, a_star, 1e-6 * std::abs(a_star));

  // Y is P-orthogonal to the tangent space at x.
  const double yn = p_norm(nc.y, g);
  for (int rep = 0; rep < 20; ++rep) {
    TangentVector t = random_tangent(x, g, 1.0, rng);
    const double tn = norm(t, g);
    EXPECT_LE(std::abs(p_inner(nc.y, embed(t), g)), 1e-11 * yn * tn);
  }
}

TEST(NormalCorrection, FullRankPointHasNoNormalComponent) {
  SplitMix64 rng(412);
  SyntheticProblem s = testing::random_problem(6, 4, 1, false, rng);
  Metric g = s.pd.metric();
  FixedRankPoint x = random_point(g, 4, rng);  // rank = n: tangent space is everything
  NormalCorrection nc = normal_correction(s.pd, g, x, 2);
  EXPECT_TRUE(nc.zero);
  EXPECT_DOUBLE_EQ(nc.alpha, 0.0);
  EXPECT_DOUBLE_EQ(nc.y.dense().norm(), 0.0);
}

TEST(Rcg, ZeroIterationsWhenStartIsConverged) {
  SplitMix64 rng(421);
  SyntheticProblem s = testing::random_problem(6, 4, 1, false, rng, 4);
  Metric g = s.pd.metric();
  FixedRankPoint xstar = truncate_dense(dense_snapshot(s.pd), g, 4);
  SolveResult res = rcg_solve(s.pd, g, xstar);
  EXPECT_TRUE(res.converged);
  ASSERT_EQ(res.record.size(), 1);
  EXPECT_EQ(res.record.back().iteration, 0);
  EXPECT_LE(res.record.back().grad_norm, 1e-6);
  EXPECT_DOUBLE_EQ((res.x.dense() - xstar.dense()).norm(), 0.0);
}

TEST(Rcg, SmallLinearProblemMatchesDenseSnapshot) {
  SplitMix64 rng(422);
  SyntheticProblem s = testing::random_problem(6, 4, 1, false, rng, 4);
  Metric g = s.pd.metric();
  Matrix xs = dense_snapshot(s.pd);
  RcgConfig cfg;
  cfg.tol = 1e-8;
  SolveResult res = rcg_solve(s.pd, g, random_point(g, 4, rng), cfg);
  EXPECT_TRUE(res.converged);
  const double ref = testing::dense_p_norm(xs, s.dp.k, s.dp.xi[0]);
  EXPECT_LE(p_distance(res.x, xs, s.dp), 1e-6 * ref);
  // Gradient norms decrease to tol and the functional never increases beyond
  // the floating-point resolution of f.
  EXPECT_LE(res.record.back().grad_norm, cfg.tol);
  for (Index i = 1; i < res.record.size(); ++i) {
    const double prev = res.record.stats[i - 1].functional;
    EXPECT_LE(res.record.stats[i].functional, prev + 1e-11 * (1.0 + std::abs(prev)));
    EXPECT_EQ(res.record.stats[i].iteration, res.record.stats[i - 1].iteration + 1);
    EXPECT_GT(res.record.stats[i].step, 0.0);
  }
}

TEST(Rcg, NonlinearProblemConvergesWithMonotoneFunctional) {
  SplitMix64 rng(423);
  SyntheticProblem s = testing::random_problem(8, 6, 1, true, rng);
  Metric g = s.pd.metric();
  RcgConfig cfg;
  cfg.tol = 1e-8;
  SolveResult res = rcg_solve(s.pd, g, random_point(g, 3, rng), cfg);
  EXPECT_TRUE(res.converged);
  EXPECT_LE(res.record.back().grad_norm, cfg.tol);
  for (Index i = 1; i < res.record.size(); ++i) {
    const double prev = res.record.stats[i - 1].functional;
    EXPECT_LE(res.record.stats[i].functional, prev + 1e-11 * (1.0 + std::abs(prev)));
  }
  // At the solver's stationary point the dense euclidean gradient projected
  // onto the tangent space is small too.
  Matrix dg = testing::dense_euclid_gradient(s.dp, res.x.dense());
  Matrix pg = testing::dense_project_tangent(res.x.U, res.x.V, dg, s.dp.k, s.dp.xi[0]);
  EXPECT_LE(testing::dense_p_norm(pg, s.dp.k, s.dp.xi[0]), 10 * cfg.tol);
}

TEST(Rcg, DeterministicRecord) {
  SplitMix64 rng(424);
  SyntheticProblem s = testing::random_problem(6, 5, 1, true, rng);
  Metric g = s.pd.metric();
  SplitMix64 r1(77), r2(77);
  FixedRankPoint x1 = random_point(g, 2, r1), x2 = random_point(g, 2, r2);
  RcgConfig cfg;
  cfg.tol = 1e-7;
  SolveResult a = rcg_solve(s.pd, g, x1, cfg), b = rcg_solve(s.pd, g, x2, cfg);
  ASSERT_EQ(a.record.size(), b.record.size());
  for (Index i = 0; i < a.record.size(); ++i) {
    EXPECT_EQ(a.record.stats[i].functional, b.record.stats[i].functional);
    EXPECT_EQ(a.record.stats[i].grad_norm, b.record.stats[i].grad_norm);
    EXPECT_EQ(a.record.stats[i].step, b.record.stats[i].step);
    EXPECT_EQ(a.record.stats[i].inner_iters, b.record.stats[i].inner_iters);
  }
  EXPECT_DOUBLE_EQ((a.x.dense() - b.x.dense()).norm(), 0.0);
}

TEST(Rcg, StallCarriesPartialHistory) {
  SplitMix64 rng(425);
  SyntheticProblem s = testing::random_problem(6, 5, 1, true, rng);
  // Inflate the quartic so the quadratic-model step grossly overshoots, then
  // forbid backtracking.
  s.pd.nonlinearity = NonlinearitySpec::lumped_quartic(Vector(1e6 * s.dp.w));
  Metric g = s.pd.metric();
  RcgConfig cfg;
  cfg.max_backtracks = 0;
  try {
    rcg_solve(s.pd, g, random_point(g, 2, rng), cfg);
    FAIL() << "expected LineSearchStalled";
  } catch (const LineSearchStalled& e) {
    ASSERT_NE(e.state(), nullptr);
    EXPECT_GE(e.state()->record.size(), 1);
    EXPECT_EQ(e.state()->x.rank(), 2);
  }
}

TEST(Rtr, LinearProblemMatchesDenseSnapshot) {
  SplitMix64 rng(431);
  SyntheticProblem s = testing::random_problem(6, 4, 1, false, rng, 4);
  Metric g = s.pd.metric();
  Matrix xs = dense_snapshot(s.pd);
  RtrConfig cfg;
  cfg.tol = 1e-8;
  SolveResult res = rtr_solve(s.pd, g, random_point(g, 4, rng), cfg);
  EXPECT_TRUE(res.converged);
  const double ref = testing::dense_p_norm(xs, s.dp.k, s.dp.xi[0]);
  EXPECT_LE(p_distance(res.x, xs, s.dp), 1e-6 * ref);
  for (Index i = 1; i < res.record.size(); ++i) {
    const double prev = res.record.stats[i - 1].functional;
    EXPECT_LE(res.record.stats[i].functional, prev + 1e-11 * (1.0 + std::abs(prev)));
  }
}

// At full rank the retraction is exact, so on a linear problem the model is
// the pullback and every step has rho = 1: no shrinks, no rejections, and
// near-Newton convergence from a warm start.
TEST(Rtr, FullRankQuadraticConvergesInThreeOuterIterations) {
  SplitMix64 rng(432);
  SyntheticProblem s = testing::random_problem(6, 4, 1, false, rng, 4);
  Metric g = s.pd.metric();
  FixedRankPoint xstar = truncate_dense(dense_snapshot(s.pd), g, 4);
  SplitMix64 rng2(433);
  TangentVector dx = random_tangent(xstar, g, 1e-3, rng2);
  FixedRankPoint x0 = retract(xstar, dx, g);
  RtrConfig cfg;
  cfg.tol = 1e-9;
  cfg.rcg_warmup = false;
  SolveResult res = rtr_solve(s.pd, g, x0, cfg);
  EXPECT_TRUE(res.converged);
  EXPECT_LE(res.record.size() - 1, 3);
  for (Index i = 1; i < res.record.size(); ++i) {
    EXPECT_LT(res.record.stats[i].functional, res.record.stats[i - 1].functional);
    // rho = 1 on every step: radius never shrinks from its initial value.
    EXPECT_GE(res.record.stats[i].step, cfg.delta1);
  }
}

TEST(Rtr, NonlinearProblemConvergesAndFunctionalNeverIncreases) {
  SplitMix64 rng(434);
  SyntheticProblem s = testing::random_problem(8, 6, 1, true, rng);
  Metric g = s.pd.metric();
  RtrConfig cfg;
  cfg.tol = 1e-8;
  SolveResult res = rtr_solve(s.pd, g, random_point(g, 3, rng), cfg);
  EXPECT_TRUE(res.converged);
  EXPECT_LE(res.record.back().grad_norm, cfg.tol);
  for (Index i = 1; i < res.record.size(); ++i) {
    const double prev = res.record.stats[i - 1].functional;
    // Accepted steps may raise f by at most the rho-regularization noise
    // floor (~1e3 eps |f|).
    EXPECT_LE(res.record.stats[i].functional, prev + 1e-11 * (1.0 + std::abs(prev)));
  }
}

TEST(Rtr, DeterministicRecord) {
  SplitMix64 rng(435);
  SyntheticProblem s = testing::random_problem(6, 5, 1, true, rng);
  Metric g = s.pd.metric();
  SplitMix64 r1(88), r2(88);
  RtrConfig cfg;
  cfg.tol = 1e-7;
  SolveResult a = rtr_solve(s.pd, g, random_point(g, 2, r1), cfg);
  SolveResult b = rtr_solve(s.pd, g, random_point(g, 2, r2), cfg);
  ASSERT_EQ(a.record.size(), b.record.size());
  for (Index i = 0; i < a.record.size(); ++i) {
    EXPECT_EQ(a.record.stats[i].functional, b.record.stats[i].functional);
    EXPECT_EQ(a.record.stats[i].grad_norm, b.record.stats[i].grad_norm);
    EXPECT_EQ(a.record.stats[i].inner_iters, b.record.stats[i].inner_iters);
  }
}

TEST(RankAdaptive, StaircaseReachesPlantedRank) {
  SplitMix64 rng(441);
  Vector sig(5);
  sig << 1.0, 3e-2, 1e-3, 3e-5, 1e-9;
  PlantedProblem pp = planted_solution_problem(12, 10, 2, sig, rng);
  Metric g = pp.s.pd.metric();
  RankAdaptiveConfig cfg;
  cfg.initial_rank = 1;
  cfg.rank_increase = 1;
  cfg.tol = 1e-6;
  cfg.max_phases = 12;
  cfg.rcg.tol = 2e-7;
  cfg.rcg.max_iters = 500;
  SolveResult res = rank_adaptive_solve(pp.s.pd, g, cfg, ObjectiveConfig{}, 99);
  EXPECT_TRUE(res.converged);

  // Rank trajectory never decreases except through explicit reductions, and
  // never jumps by more than r_up.
  Index max_rank = 0;
  for (const IterationStat& st : res.record.stats) max_rank = std::max(max_rank, st.rank);
  // The tol-truncated planted solution keeps 4 singular values at 1e-6.
  EXPECT_GE(res.x.rank(), 4);
  EXPECT_LE(max_rank, 6);
  EXPECT_LE(res.record.back().residual, cfg.tol);

  // Residuals at the end of successive rank plateaus strictly decrease.
  std::vector<double> plateau;
  for (Index i = 0; i + 1 < res.record.size(); ++i)
    if (res.record.stats[i + 1].rank != res.record.stats[i].rank &&
        std::isfinite(res.record.stats[i].residual))
      plateau.push_back(res.record.stats[i].residual);
  plateau.push_back(res.record.back().residual);
  ASSERT_GE(plateau.size(), 3u);
  for (std::size_t i = 1; i < plateau.size(); ++i) EXPECT_LT(plateau[i], plateau[i - 1]);
}

TEST(RankAdaptive, NoIncreaseWhenInitialRankSuffices) {
  SplitMix64 rng(442);
  Vector sig(5);
  sig << 1.0, 3e-2, 1e-3, 3e-5, 1e-9;
  PlantedProblem pp = planted_solution_problem(12, 10, 2, sig, rng);
  Metric g = pp.s.pd.metric();
  RankAdaptiveConfig cfg;
  cfg.initial_rank = 5;
  cfg.rank_increase = 2;
  cfg.tol = 1e-6;
  cfg.rcg.tol = 2e-7;
  cfg.rcg.max_iters = 500;
  SolveResult res = rank_adaptive_solve(pp.s.pd, g, cfg, ObjectiveConfig{}, 100);
  EXPECT_TRUE(res.converged);
  for (const IterationStat& st : res.record.stats) EXPECT_LE(st.rank, 5);
}

TEST(RankAdaptive, ThrowsRankExhaustedWhenToleranceIsUnreachable) {
  SplitMix64 rng(443);
  SyntheticProblem s = testing::random_problem(4, 3, 1, false, rng, 3);
  Metric g = s.pd.metric();
  RankAdaptiveConfig cfg;
  cfg.initial_rank = 1;
  cfg.rank_increase = 1;
  cfg.tol = 1e-30;
  cfg.rcg.tol = 1e-10;
  cfg.max_phases = 16;
  try {
    rank_adaptive_solve(s.pd, g, cfg, ObjectiveConfig{}, 5);
    FAIL() << "expected RankExhausted";
  } catch (const RankExhausted& e) {
    ASSERT_NE(e.state(), nullptr);
    EXPECT_EQ(e.state()->x.rank(), 3);  // min(m, n)
    EXPECT_GE(e.state()->record.size(), 3);
  }
}

TEST(RankAdaptive, DeterministicWithSeed) {
  SplitMix64 rng(444);
  Vector sig(3);
  sig << 1.0, 1e-2, 1e-4;
  PlantedProblem pp = planted_solution_problem(8, 6, 1, sig, rng);
  Metric g = pp.s.pd.metric();
  RankAdaptiveConfig cfg;
  cfg.initial_rank = 1;
  cfg.rank_increase = 1;
  cfg.tol = 1e-6;
  cfg.rcg.tol = 2e-7;
  SolveResult a = rank_adaptive_solve(pp.s.pd, g, cfg, ObjectiveConfig{}, 7);
  SolveResult b = rank_adaptive_solve(pp.s.pd, g, cfg, ObjectiveConfig{}, 7);
  ASSERT_EQ(a.record.size(), b.record.size());
  for (Index i = 0; i < a.record.size(); ++i) {
    EXPECT_EQ(a.record.stats[i].functional, b.record.stats[i].functional);
    EXPECT_EQ(a.record.stats[i].rank, b.record.stats[i].rank);
    EXPECT_EQ(a.record.stats[i].grad_norm, b.record.stats[i].grad_norm);
  }
  EXPECT_DOUBLE_EQ((a.x.dense() - b.x.dense()).norm(), 0.0);
}

TEST(EnsembleQuadraticForm, MatchesDenseTrace) {
  SplitMix64 rng(451);
  SyntheticProblem s = testing::random_problem(6, 5, 2, false, rng);
  Matrix z = testing::random_matrix(6, 5, rng);
  FactoredAmbient zf(z, Matrix::Identity(5, 5));
  double expect = 0.0;
  for (std::size_t i = 0; i < s.dp.a.size(); ++i)
    expect += (s.dp.xi[i].asDiagonal() * z.transpose() * s.dp.a[i] * z).trace();
  EXPECT_NEAR(ensemble_quadratic_form(s.pd, zf), expect, 1e-10 * std::abs(expect));
}

}  // namespace
}  // namespace rlra
