#include "rlra/weighted_svd.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/QR>
#include <Eigen/SVD>

namespace rlra {

namespace {

constexpr double kNumericalRankFloor = 1e-14;

// Thin QR helper: A (q x k) -> Q (q x s), R (s x k), s = min(q, k).
void thin_qr(const Matrix& a, Matrix& q, Matrix& r) {
  const Index s = std::min(a.rows(), a.cols());
  Eigen::HouseholderQR<Matrix> qr(a);
  q = qr.householderQ() * Matrix::Identity(a.rows(), s);
  r = qr.matrixQR().topRows(s).triangularView<Eigen::Upper>();
}

}  // namespace

FixedRankPoint weighted_truncated_svd(const FactoredAmbient& z, const Metric& g,
                                      TruncationTarget target) {
  RLRA_REQUIRE(z.rows() == g.rows() && z.cols() == g.cols(),
               "factored matrix does not match the metric dimensions");
  RLRA_REQUIRE(target.rank != 0, "target rank must be >= 1 or unset");

  Matrix q1, r1, q2, r2;
  thin_qr(g.rk_apply(z.left), q1, r1);
  thin_qr(g.sqrt_xi0().asDiagonal() * z.right, q2, r2);

  Matrix core = z.core ? Matrix(r1 * (*z.core) * r2.transpose())
                       : Matrix(r1 * r2.transpose());
  const Index cs = std::min(core.rows(), core.cols());
  Matrix w, v;
  Vector s;
  if (cs > 32) {
    Eigen::BDCSVD<Matrix> svd(core, Eigen::ComputeThinU | Eigen::ComputeThinV);
    w = svd.matrixU();
    v = svd.matrixV();
    s = svd.singularValues();
  } else {
    Eigen::JacobiSVD<Matrix> svd(core, Eigen::ComputeThinU | Eigen::ComputeThinV);
    w = svd.matrixU();
    v = svd.matrixV();
    s = svd.singularValues();
  }

  const double s1 = s.size() > 0 ? s(0) : 0.0;
  Index r = 0;
  if (s1 > 0.0) {
    // Keep sigma_i >= threshold (ties kept); values under the numerical floor
    // are always dropped.
    const double threshold = s1 * std::max(target.tol, kNumericalRankFloor);
    while (r < s.size() && s(r) >= threshold) ++r;
  }
  bool reduced = false;
  if (target.rank >= 1) {
    if (r > target.rank) {
      r = target.rank;
    } else if (r < target.rank) {
      reduced = true;
    }
  }

  FixedRankPoint out;
  out.U = g.rk_solve(Matrix(q1 * w.leftCols(r)));
  out.sigma = s.head(r);
  out.V = g.sqrt_xi0().cwiseInverse().asDiagonal() * Matrix(q2 * v.leftCols(r));
  out.rank_reduced = reduced;
  return out;
}

double p_inner(const FactoredAmbient& a, const FactoredAmbient& b, const Metric& g) {
  RLRA_REQUIRE(a.rows() == b.rows() && a.cols() == b.cols(), "shape mismatch in p_inner");
  // trace(Xi0 A^T K B) = trace((A_l^T K B_l) cores (B_r^T Xi0 A_r)) contracted
  // in factored form.
  Matrix la = a.core ? Matrix(a.left * (*a.core)) : a.left;
  Matrix lb = b.core ? Matrix(b.left * (*b.core)) : b.left;
  Matrix gl = la.transpose() * g.apply_k(lb);            // ka x kb
  Matrix gr = b.right.transpose() * g.scale_xi0(a.right);  // kb x ka
  return (gl.array() * gr.transpose().array()).sum();
}

double p_norm(const FactoredAmbient& z, const Metric& g) {
  return std::sqrt(std::max(0.0, p_inner(z, z, g)));
}

}  // namespace rlra
