#pragma once

#include <vector>

#include "rlra/metric.hpp"
#include "rlra/point.hpp"
#include "rlra/problem.hpp"

namespace rlra {

// Per-column solver outcome recorded while assembling a snapshot matrix.
struct ColumnStat {
  Index iterations = 0;
  double residual = 0.0;  // euclidean norm of A(xi_j) x_j + g(x_j) - b_j
  bool failed = false;
};

// Ground-truth sample solutions X = [x(xi_1) | ... | x(xi_n)] with the
// metadata of the per-column solver that produced them. Columns are solved
// independently in index order, so assembly is deterministic.
struct SnapshotMatrix {
  Matrix x;
  std::vector<ColumnStat> columns;

  Index rows() const { return x.rows(); }
  Index cols() const { return x.cols(); }
  bool all_converged() const {
    for (const ColumnStat& c : columns)
      if (c.failed) return false;
    return true;
  }
};

// Shared knobs of the snapshot solvers.
struct SnapshotConfig {
  double rel_tol = 1e-12;   // per-column relative residual target
  Index max_iters = 100000;  // gradient-descent / inner-CG cap per column
  Index max_newton = 30;     // Newton cap per column
};

// Solves every sample system A(xi_j) x = b_j by K-preconditioned gradient
// descent with the optimal step of the quadratic. Columns that miss the
// residual target within the iteration cap are flagged failed. Requires a
// linear problem.
SnapshotMatrix solve_snapshot_linear(const ProblemData& pd, const SnapshotConfig& cfg = {});

// Solves every sample system A(xi_j) x + w.*x^3 = b_j by Newton's method
// from a zero initial guess; the Jacobian systems are solved with
// K-preconditioned CG. Columns are flagged failed when the Newton cap is
// exceeded or the Jacobian loses positive definiteness along a CG direction.
// A problem without nonlinearity degenerates to one Newton step per column.
SnapshotMatrix solve_snapshot_newton(const ProblemData& pd, const SnapshotConfig& cfg = {});

// ||X - Xr||_P / ||X||_P, accumulated blockwise in a single pass over the
// snapshot; returns the absolute norm when the snapshot is zero.
double relative_error(const SnapshotMatrix& snap, const FixedRankPoint& xr, const Metric& g);

// Weighted singular values sigma(R_K X sqrt(Xi0)), nonincreasing.
Vector weighted_spectrum(const SnapshotMatrix& snap, const Metric& g);

// Relative best rank-r approximation error in the P-norm:
// sqrt(sum_{i>r} sigma_i^2 / sum_i sigma_i^2) of the weighted spectrum.
double best_rank_error(const SnapshotMatrix& snap, Index r, const Metric& g);
double best_rank_error(const Vector& spectrum, Index r);

// Full weighted spectrum plus the algebraic decay exponent fitted by least
// squares on log sigma_l against log l over l in [4, 40] (positive values
// mean decay; +inf when fewer than two positive spectrum entries lie in the
// window).
struct SingularDecay {
  Vector sigma;
  double exponent = 0.0;
};
SingularDecay singular_decay(const SnapshotMatrix& snap, const Metric& g);

}  // namespace rlra
