#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "rlra/oracle.hpp"

namespace rlra {

namespace {

Vector rhs_column(const FactoredAmbient& b, Index j) {
  Vector rj = b.right.row(j).transpose();
  if (b.core) rj = (*b.core) * rj;
  return b.left * rj;
}

// K-preconditioned CG for J d = rhs with J applied through a callback; stops
// at relative residual rel_tol or after max_iters steps. Returns false when a
// direction of nonpositive curvature shows up.
template <typename Apply>
bool precond_cg(const Apply& apply_j, const SpdFactorization& k, const Vector& rhs,
                double rel_tol, Index max_iters, Vector& d) {
  d = Vector::Zero(rhs.size());
  const double target = rel_tol * rhs.norm();
  Vector r = rhs;
  if (r.norm() <= target) return true;
  Vector z = k.solve(r);
  Vector p = z;
  double rz = r.dot(z);
  for (Index it = 0; it < max_iters; ++it) {
    const Vector ap = apply_j(p);
    const double pap = p.dot(ap);
    if (pap <= 0.0) return false;
    const double alpha = rz / pap;
    d += alpha * p;
    r -= alpha * ap;
    if (r.norm() <= target) return true;
    z = k.solve(r);
    const double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  return true;  // capped: caller judges by the outer residual
}

}  // namespace

SnapshotMatrix solve_snapshot_linear(const ProblemData& pd, const SnapshotConfig& cfg) {
  RLRA_REQUIRE(!pd.nonlinearity.active(),
               "snapshot gradient descent requires a linear problem");
  RLRA_REQUIRE(cfg.rel_tol > 0.0 && cfg.max_iters > 0, "invalid snapshot config");
  const Index m = pd.rows();
  const Index n = pd.cols();
  SnapshotMatrix out;
  out.x = Matrix::Zero(m, n);
  out.columns.assign(static_cast<std::size_t>(n), {});
  for (Index j = 0; j < n; ++j) {
    const Vector bj = rhs_column(pd.b, j);
    const double bn = bj.norm();
    ColumnStat& st = out.columns[static_cast<std::size_t>(j)];
    if (bn == 0.0) continue;
    const SparseSymMatrix aj = affine_combine(pd.op, pd.samples.samples.col(j));
    Vector x = Vector::Zero(m);
    for (;;) {
      const Vector r = bj - aj.mat * x;
      st.residual = r.norm();
      if (st.residual <= cfg.rel_tol * bn || st.iterations >= cfg.max_iters) break;
      const Vector z = pd.kfac->solve(r);
      const Vector az = aj.mat * z;
      const double zaz = z.dot(az);
      RLRA_REQUIRE(zaz > 0.0, "sample operator lost positive definiteness");
      x += (z.dot(r) / zaz) * z;
      ++st.iterations;
    }
    st.failed = st.residual > cfg.rel_tol * bn;
    out.x.col(j) = x;
  }
  return out;
}

SnapshotMatrix solve_snapshot_newton(const ProblemData& pd, const SnapshotConfig& cfg) {
  RLRA_REQUIRE(cfg.rel_tol > 0.0 && cfg.max_iters > 0 && cfg.max_newton > 0,
               "invalid snapshot config");
  const Index m = pd.rows();
  const Index n = pd.cols();
  const bool cubic = pd.nonlinearity.active();
  SnapshotMatrix out;
  out.x = Matrix::Zero(m, n);
  out.columns.assign(static_cast<std::size_t>(n), {});
  for (Index j = 0; j < n; ++j) {
    const Vector bj = rhs_column(pd.b, j);
    const double bn = bj.norm();
    ColumnStat& st = out.columns[static_cast<std::size_t>(j)];
    const SparseSymMatrix aj = affine_combine(pd.op, pd.samples.samples.col(j));
    Vector x = Vector::Zero(m);
    auto residual = [&](const Vector& y) -> Vector {
      Vector f = aj.mat * y - bj;
      if (cubic) f += pd.nonlinearity.w.cwiseProduct(y.array().cube().matrix());
      return f;
    };
    for (;;) {
      const Vector f = residual(x);
      st.residual = f.norm();
      if (st.residual <= cfg.rel_tol * bn || st.iterations >= cfg.max_newton) break;
      Vector jac_diag;
      if (cubic) jac_diag = 3.0 * pd.nonlinearity.w.cwiseProduct(x.cwiseAbs2());
      auto apply_jac = [&](const Vector& v) -> Vector {
        Vector jv = aj.mat * v;
        if (cubic) jv += jac_diag.cwiseProduct(v);
        return jv;
      };
      Vector delta;
      if (!precond_cg(apply_jac, *pd.kfac, Vector(-f), cfg.rel_tol, cfg.max_iters, delta)) {
        st.failed = true;
        break;
      }
      x += delta;
      ++st.iterations;
    }
    st.failed = st.failed || st.residual > cfg.rel_tol * bn;
    out.x.col(j) = x;
  }
  return out;
}

double relative_error(const SnapshotMatrix& snap, const FixedRankPoint& xr, const Metric& g) {
  RLRA_REQUIRE(snap.rows() == xr.rows() && snap.cols() == xr.cols(),
               "snapshot and point dimensions disagree");
  RLRA_REQUIRE(snap.rows() == g.rows() && snap.cols() == g.cols(),
               "snapshot and metric dimensions disagree");
  const Index n = snap.cols();
  const Index block = 256;
  const Matrix us = xr.U * xr.sigma.asDiagonal();
  double diff2 = 0.0;
  double ref2 = 0.0;
  for (Index j0 = 0; j0 < n; j0 += block) {
    const Index w = std::min(block, n - j0);
    const Matrix xb = snap.x.middleCols(j0, w);
    const Matrix db = xb - us * xr.V.middleRows(j0, w).transpose();
    const auto scale = g.sqrt_xi0().segment(j0, w);
    diff2 += (g.rk_apply(db) * scale.asDiagonal()).squaredNorm();
    ref2 += (g.rk_apply(xb) * scale.asDiagonal()).squaredNorm();
  }
  const double diff = std::sqrt(diff2);
  return ref2 > 0.0 ? diff / std::sqrt(ref2) : diff;
}

Vector weighted_spectrum(const SnapshotMatrix& snap, const Metric& g) {
  RLRA_REQUIRE(snap.rows() == g.rows() && snap.cols() == g.cols(),
               "snapshot and metric dimensions disagree");
  Matrix scaled = g.rk_apply(snap.x) * g.sqrt_xi0().asDiagonal();
  Eigen::BDCSVD<Matrix> svd(scaled);
  return svd.singularValues();
}

double best_rank_error(const Vector& spectrum, Index r) {
  RLRA_REQUIRE(r >= 1, "rank must be positive");
  double tail = 0.0;
  double total = 0.0;
  for (Index i = 0; i < spectrum.size(); ++i) {
    const double s2 = spectrum(i) * spectrum(i);
    total += s2;
    if (i >= r) tail += s2;
  }
  return total > 0.0 ? std::sqrt(tail / total) : 0.0;
}

double best_rank_error(const SnapshotMatrix& snap, Index r, const Metric& g) {
  return best_rank_error(weighted_spectrum(snap, g), r);
}

SingularDecay singular_decay(const SnapshotMatrix& snap, const Metric& g) {
  SingularDecay out;
  out.sigma = weighted_spectrum(snap, g);
  std::vector<double> lx;
  std::vector<double> ly;
  const Index last = std::min<Index>(40, out.sigma.size());
  for (Index l = 4; l <= last; ++l) {
    const double s = out.sigma(l - 1);
    if (s > 0.0) {
      lx.push_back(std::log(static_cast<double>(l)));
      ly.push_back(std::log(s));
    }
  }
  if (lx.size() < 2) {
    out.exponent = std::numeric_limits<double>::infinity();
    return out;
  }
  const double k = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= k;
  my /= k;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  out.exponent = -sxy / sxx;
  return out;
}

}  // namespace rlra
