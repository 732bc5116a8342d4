#include "rlra/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/QR>

namespace rlra {

namespace {

constexpr double kDegenerate = 1e-14;

Matrix left_with_core(const FactoredAmbient& z) {
  return z.core ? Matrix(z.left * (*z.core)) : z.left;
}

// Extend the columns of f to `want` columns, orthonormal in the inner product
// u^T W v realized by apply_w, using Gram-Schmidt over canonical basis
// vectors. Candidates nearly inside the current span are skipped.
template <typename ApplyW>
void complete_columns(Matrix& f, Index want, ApplyW&& apply_w) {
  const Index m = f.rows();
  Index have = f.cols();
  f.conservativeResize(m, want);
  Index cand = 0;
  while (have < want) {
    RLRA_REQUIRE(cand < m, "cannot complete an orthonormal basis: all candidates degenerate");
    Vector e = Vector::Zero(m);
    e(cand++) = 1.0;
    const double before = std::sqrt((e.array() * Vector(apply_w(e)).array()).sum());
    for (int round = 0; round < 2; ++round) {
      Vector we = apply_w(e);
      e -= f.leftCols(have) * (f.leftCols(have).transpose() * we);
    }
    const double after = std::sqrt(std::max(0.0, (e.array() * Vector(apply_w(e)).array()).sum()));
    if (after > 1e-6 * before) {
      f.col(have++) = e / after;
    }
  }
}

void pad_point(FixedRankPoint& y, Index r, const Metric& g) {
  const Index have = y.rank();
  const double base = have > 0 ? y.sigma(have - 1) : 1.0;
  complete_columns(y.U, r, [&g](const Vector& v) { return Vector(g.apply_k(v)); });
  complete_columns(y.V, r, [&g](const Vector& v) { return Vector(g.scale_xi0(v)); });
  y.sigma.conservativeResize(r);
  y.sigma.tail(r - have).setConstant(base * 1e-8);
  y.padded = true;
}

}  // namespace

double point_invariant_residual(const Metric& g, const FixedRankPoint& x) {
  const Index r = x.rank();
  Matrix gu = x.U.transpose() * g.apply_k(x.U) - Matrix::Identity(r, r);
  Matrix gv = x.V.transpose() * g.scale_xi0(x.V) - Matrix::Identity(r, r);
  return std::max(gu.norm(), gv.norm());
}

void validate_point(const Metric& g, const FixedRankPoint& x, double tol) {
  RLRA_REQUIRE(x.U.rows() == g.rows() && x.V.rows() == g.cols() &&
                   x.U.cols() == x.rank() && x.V.cols() == x.rank(),
               "point dimensions do not match the metric");
  for (Index i = 0; i < x.rank(); ++i) {
    if (!(x.sigma(i) > 0.0)) throw InvariantViolation("singular values must be positive");
    if (i > 0 && x.sigma(i) > x.sigma(i - 1) * (1.0 + 1e-12))
      throw InvariantViolation("singular values must be sorted in decreasing order");
  }
  const double res = point_invariant_residual(g, x);
  if (!(res <= tol))
    throw InvariantViolation("weighted orthonormality residual " + std::to_string(res) +
                             " exceeds tolerance");
}

double tangent_gauge_residual(const Metric& g, const TangentVector& t) {
  RLRA_REQUIRE(t.anchor != nullptr, "tangent vector has no anchor");
  const FixedRankPoint& x = *t.anchor;
  Matrix kup = g.apply_k(t.Up);
  Matrix xvp = g.scale_xi0(t.Vp);
  const double su = std::max(1.0, std::sqrt(std::max(0.0, (t.Up.array() * kup.array()).sum())));
  const double sv = std::max(1.0, std::sqrt(std::max(0.0, (t.Vp.array() * xvp.array()).sum())));
  Matrix gu = x.U.transpose() * kup;
  Matrix gv = x.V.transpose() * xvp;
  return std::max(gu.norm() / su, gv.norm() / sv);
}

void validate_tangent(const Metric& g, const TangentVector& t, double tol) {
  RLRA_REQUIRE(t.anchor != nullptr, "tangent vector has no anchor");
  const FixedRankPoint& x = *t.anchor;
  RLRA_REQUIRE(t.M.rows() == x.rank() && t.M.cols() == x.rank() &&
                   t.Up.rows() == x.rows() && t.Up.cols() == x.rank() &&
                   t.Vp.rows() == x.cols() && t.Vp.cols() == x.rank(),
               "tangent dimensions do not match the anchor");
  const double res = tangent_gauge_residual(g, t);
  if (!(res <= tol))
    throw InvariantViolation("tangent gauge residual " + std::to_string(res) +
                             " exceeds tolerance");
}

TangentVector project_tangent(const FixedRankPoint& x, const FactoredAmbient& z,
                              const Metric& g) {
  RLRA_REQUIRE(z.rows() == x.rows() && z.cols() == x.cols(), "ambient/point shape mismatch");
  Matrix lc = left_with_core(z);
  Matrix ku = g.apply_k(x.U);
  Matrix xv = g.scale_xi0(x.V);
  Matrix zxv = lc * (z.right.transpose() * xv);    // Z Xi0 V
  Matrix ztku = z.right * (lc.transpose() * ku);   // Z^T K U
  TangentVector t = TangentVector::zero(x);
  t.M = ku.transpose() * zxv;
  t.Up = zxv - x.U * t.M;
  t.Vp = ztku - x.V * t.M.transpose();
  return t;
}

double inner(const TangentVector& a, const TangentVector& b, const Metric& g) {
  RLRA_REQUIRE(a.anchor == b.anchor && a.anchor != nullptr,
               "inner product across different anchors");
  double s = (a.M.array() * b.M.array()).sum();
  s += (a.Up.array() * g.apply_k(b.Up).array()).sum();
  s += (a.Vp.array() * g.scale_xi0(b.Vp).array()).sum();
  return s;
}

double norm(const TangentVector& t, const Metric& g) {
  return std::sqrt(std::max(0.0, inner(t, t, g)));
}

FactoredAmbient embed(const TangentVector& t) {
  RLRA_REQUIRE(t.anchor != nullptr, "tangent vector has no anchor");
  const FixedRankPoint& x = *t.anchor;
  const Index r = x.rank();
  Matrix left(x.rows(), 2 * r);
  left.leftCols(r) = x.U * t.M + t.Up;
  left.rightCols(r) = x.U;
  Matrix right(x.cols(), 2 * r);
  right.leftCols(r) = x.V;
  right.rightCols(r) = t.Vp;
  return FactoredAmbient(std::move(left), std::move(right));
}

FactoredAmbient project_normal(const FixedRankPoint& x, const FactoredAmbient& z,
                               const Metric& g) {
  FactoredAmbient tpart = embed(project_tangent(x, z, g)).scaled(-1.0);
  return FactoredAmbient::sum({&z, &tpart});
}

FixedRankPoint retract(const FixedRankPoint& x, const TangentVector& t, const Metric& g) {
  RLRA_REQUIRE(t.anchor == &x, "tangent vector anchored at a different point");
  const Index r = x.rank();
  Matrix left(x.rows(), 2 * r);
  left.leftCols(r) = x.U;
  left.rightCols(r) = t.Up;
  Matrix right(x.cols(), 2 * r);
  right.leftCols(r) = x.V;
  right.rightCols(r) = t.Vp;
  Matrix core = Matrix::Zero(2 * r, 2 * r);
  core.topLeftCorner(r, r) = Matrix(x.sigma.asDiagonal()) + t.M;
  core.topRightCorner(r, r).setIdentity();
  core.bottomLeftCorner(r, r).setIdentity();
  FixedRankPoint y = weighted_truncated_svd(FactoredAmbient(std::move(left), std::move(core),
                                                            std::move(right)),
                                            g, TruncationTarget::by_rank(r));
  if (y.rank() < r) pad_point(y, r, g);
  return y;
}

TangentVector transport(const FixedRankPoint& to, const TangentVector& t, const Metric& g) {
  return project_tangent(to, embed(t), g);
}

TangentVector riemannian_hessian_apply(const FixedRankPoint& x, const TangentVector& eta,
                                      const FactoredAmbient& grad,
                                      const FactoredAmbient& hess_dir, const Metric& g) {
  RLRA_REQUIRE(eta.anchor == &x, "tangent vector anchored at a different point");
  const Index r = x.rank();
  RLRA_REQUIRE(r > 0, "curvature terms need a rank >= 1 point");
  if (!(x.sigma(r - 1) >= kDegenerate * x.sigma(0)))
    throw IllConditionedPoint(
        "smallest singular value below 1e-14 of the largest; curvature terms are unreliable");
  TangentVector h = project_tangent(x, hess_dir, g);
  Vector sinv = x.sigma.cwiseInverse();
  Matrix lg = left_with_core(grad);
  // grad Xi0 Vp Sigma^{-1}, made K-orthogonal to U.
  Matrix a = lg * (grad.right.transpose() * g.scale_xi0(eta.Vp)) * sinv.asDiagonal();
  a -= x.U * (g.apply_k(x.U).transpose() * a);
  h.Up += a;
  // grad^T K Up Sigma^{-1}, made Xi0-orthogonal to V.
  Matrix b = grad.right * (lg.transpose() * g.apply_k(eta.Up)) * sinv.asDiagonal();
  b -= x.V * (g.scale_xi0(x.V).transpose() * b);
  h.Vp += b;
  return h;
}

FixedRankPoint random_point(const Metric& g, Index rank, SplitMix64& rng) {
  RLRA_REQUIRE(rank >= 1 && rank <= std::min(g.rows(), g.cols()), "invalid rank");
  Matrix gu(g.rows(), rank), gv(g.cols(), rank);
  for (Index j = 0; j < rank; ++j) {
    for (Index i = 0; i < gu.rows(); ++i) gu(i, j) = rng.gaussian();
    for (Index i = 0; i < gv.rows(); ++i) gv(i, j) = rng.gaussian();
  }
  Eigen::HouseholderQR<Matrix> qru(g.rk_apply(gu));
  Matrix qu = qru.householderQ() * Matrix::Identity(g.rows(), rank);
  Eigen::HouseholderQR<Matrix> qrv(Matrix(g.sqrt_xi0().asDiagonal() * gv));
  Matrix qv = qrv.householderQ() * Matrix::Identity(g.cols(), rank);
  FixedRankPoint x;
  x.U = g.rk_solve(qu);
  x.V = g.sqrt_xi0().cwiseInverse().asDiagonal() * qv;
  x.sigma.resize(rank);
  for (Index i = 0; i < rank; ++i)
    x.sigma(i) = std::pow(2.0, -static_cast<double>(i)) * (1.0 + 0.25 * rng.uniform01());
  return x;
}

TangentVector random_tangent(const FixedRankPoint& x, const Metric& g, double scale,
                             SplitMix64& rng) {
  TangentVector t = TangentVector::zero(x);
  const Index r = x.rank();
  for (Index j = 0; j < r; ++j) {
    for (Index i = 0; i < r; ++i) t.M(i, j) = scale * rng.gaussian();
    for (Index i = 0; i < x.rows(); ++i) t.Up(i, j) = scale * rng.gaussian();
    for (Index i = 0; i < x.cols(); ++i) t.Vp(i, j) = scale * rng.gaussian();
  }
  t.Up -= x.U * (g.apply_k(x.U).transpose() * t.Up);
  t.Vp -= x.V * (g.scale_xi0(x.V).transpose() * t.Vp);
  return t;
}

}  // namespace rlra
