#include "rlra/objective.hpp"

#include <cmath>
#include <vector>

#include "rlra/kernels.hpp"

namespace rlra {
namespace {

// 1/4 w^T X^(.4) xi0 through Gram products of the square factors; never
// materializes the r^4-column factors of the fourth power.
double quartic_value(const Matrix& phi, const Matrix& v, const Vector& w, const Vector& xi0) {
  Matrix u2 = kt_product(phi, phi);
  Matrix v2 = kt_product(v, v);
  Matrix gl = u2.transpose() * (w.asDiagonal() * u2);
  Matrix gr = v2.transpose() * (xi0.asDiagonal() * v2);
  return 0.25 * (gl.array() * gr.array()).sum();
}

// sigma gap guard shared by the adjoint-based paths.
void require_spectral_gap(const FixedRankPoint& y, Index rt) {
  if (rt >= y.rank()) return;
  const double gap = y.sigma(rt - 1) - y.sigma(rt);
  if (gap < 1e-10 * y.sigma(0))
    throw NearDegenerateSpectrum("sigma gap at the compression rank is below 1e-10 sigma_1");
}

struct AdjointPieces {
  Matrix a;    // U_Z^T L_Omega, rt x k
  Matrix b;    // R_Omega^T V_Z, k x rt
  Matrix o12;  // U_Z^T Omega V_perp
  Matrix o21;  // U_perp^T Omega V_Z
  Matrix psi;  // (r - rt) x rt, sigma_kept sigma_dropped / (sigma_kept^2 - sigma_dropped^2)
  Matrix xi;   // (r - rt) x rt, sigma_kept^2 / (sigma_kept^2 - sigma_dropped^2)
};

AdjointPieces adjoint_pieces(const FixedRankPoint& y, const Matrix& lo, const Matrix& ro,
                             Index rt) {
  const Index r = y.rank();
  AdjointPieces p;
  p.a = y.U.leftCols(rt).transpose() * lo;
  p.b = ro.transpose() * y.V.leftCols(rt);
  if (rt >= r) return p;
  p.o12 = p.a * (ro.transpose() * y.V.rightCols(r - rt));
  p.o21 = (y.U.rightCols(r - rt).transpose() * lo) * p.b;
  p.psi.resize(r - rt, rt);
  p.xi.resize(r - rt, rt);
  for (Index i = 0; i < r - rt; ++i) {
    const double sd = y.sigma(rt + i);
    for (Index j = 0; j < rt; ++j) {
      const double sk = y.sigma(j);
      const double den = sk * sk - sd * sd;
      p.psi(i, j) = sk * sd / den;
      p.xi(i, j) = sk * sk / den;
    }
  }
  return p;
}

}  // namespace

double eval_functional(const ProblemData& pd, const Metric& g, const FixedRankPoint& x,
                       const ObjectiveConfig& cfg) {
  (void)g;
  const Matrix phi = x.phi();
  const Matrix& v = x.V;
  const Vector& xi0 = pd.xi.diag.at(0);
  double val = 0.0;
  std::vector<Matrix> blocks = apply_affine_block(pd.op, phi);
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    Matrix gi = phi.transpose() * blocks[i];
    Matrix hi = v.transpose() * (pd.xi.diag[i].asDiagonal() * v);
    val += 0.5 * (gi.array() * hi.array()).sum();
  }
  Matrix t1 = phi.transpose() * pd.b.left;
  if (pd.b.core) t1 *= *pd.b.core;
  Matrix t2 = pd.b.right.transpose() * (xi0.asDiagonal() * v);
  val -= (t1.array() * t2.transpose().array()).sum();
  if (pd.nonlinearity.active()) {
    const Index rt = cfg.resolve_rt(x.rank());
    if (rt >= x.rank()) {
      val += quartic_value(phi, v, pd.nonlinearity.w, xi0);
    } else {
      Matrix phit = x.U.leftCols(rt) * x.sigma.head(rt).asDiagonal();
      val += quartic_value(phit, x.V.leftCols(rt), pd.nonlinearity.w, xi0);
    }
  }
  return val;
}

FactoredAmbient hadamard_power_factors(const FixedRankPoint& x, int k) {
  RLRA_REQUIRE(k >= 2 && k <= 4, "Hadamard power factors support k = 2, 3, 4");
  const Matrix phi = x.phi();
  Matrix u2 = kt_product(phi, phi);
  Matrix v2 = kt_product(x.V, x.V);
  if (k == 2) return {std::move(u2), std::move(v2)};
  if (k == 3) return {kt_product(phi, u2), kt_product(x.V, v2)};
  return {kt_product(u2, u2), kt_product(v2, v2)};
}

FactoredAmbient euclid_gradient(const ProblemData& pd, const Metric& g,
                                const FixedRankPoint& x, const ObjectiveConfig& cfg) {
  const Matrix phi = x.phi();
  const Matrix& v = x.V;
  const Index p = pd.op.p(), r = x.rank();
  const Index wb = pd.b.right.cols();
  const bool nl = pd.nonlinearity.active();
  const Index rt = cfg.resolve_rt(r);
  const bool compressed_nl = nl && cfg.is_compressed() && rt < r;
  const bool exact_nl = nl && !compressed_nl;
  const Index width = (p + 1) * r + wb + (exact_nl ? r * r * r : 0);

  Matrix left(pd.rows(), width), right(pd.cols(), width);
  std::vector<Matrix> blocks = apply_affine_block(pd.op, phi);
  Index at = 0;
  for (Index i = 0; i <= p; ++i) {
    left.middleCols(at, r) = blocks[i];
    right.middleCols(at, r) = g.unscale_xi0(pd.xi.diag[i].asDiagonal() * v);
    at += r;
  }
  left.middleCols(at, wb) = pd.b.core ? Matrix(-pd.b.left * (*pd.b.core)) : Matrix(-pd.b.left);
  right.middleCols(at, wb) = g.unscale_xi0(pd.xi.diag[0].asDiagonal() * pd.b.right);
  at += wb;
  if (exact_nl) {
    Matrix u2 = kt_product(phi, phi);
    Matrix v2 = kt_product(v, v);
    left.middleCols(at, r * r * r) = pd.nonlinearity.w.asDiagonal() * kt_product(phi, u2);
    right.middleCols(at, r * r * r) =
        g.unscale_xi0(pd.xi.diag[0].asDiagonal() * kt_product(v, v2));
    at += r * r * r;
  }
  FactoredAmbient lin(g.solve_k(left), std::move(right));
  if (!compressed_nl) return lin;
  FactoredAmbient nlg = compressed_nonlinear_gradient(pd, g, x, rt);
  return FactoredAmbient::sum({&lin, &nlg});
}

FactoredAmbient euclid_hess_apply(const ProblemData& pd, const Metric& g,
                                  const FixedRankPoint& x, const FactoredAmbient& h,
                                  const ObjectiveConfig& cfg) {
  Matrix hl = h.core ? Matrix(h.left * (*h.core)) : h.left;
  const Matrix& hr = h.right;
  const Index p = pd.op.p(), k = hr.cols();
  const bool nl = pd.nonlinearity.active();
  // In compressed mode the quadratic model freezes the truncation: the
  // Hadamard square comes from the truncated iterate (Gauss-Newton style).
  const Index rt = cfg.resolve_rt(x.rank());
  const Index ru = nl ? (cfg.is_compressed() ? rt : x.rank()) : 0;
  const Index width = (p + 1) * k + ru * ru * k;

  Matrix left(pd.rows(), width), right(pd.cols(), width);
  std::vector<Matrix> blocks = apply_affine_block(pd.op, hl);
  Index at = 0;
  for (Index i = 0; i <= p; ++i) {
    left.middleCols(at, k) = blocks[i];
    right.middleCols(at, k) = g.unscale_xi0(pd.xi.diag[i].asDiagonal() * hr);
    at += k;
  }
  if (nl) {
    Matrix phit = x.U.leftCols(ru) * x.sigma.head(ru).asDiagonal();
    Matrix u2 = kt_product(phit, phit);
    Matrix v2 = kt_product(x.V.leftCols(ru), x.V.leftCols(ru));
    left.middleCols(at, ru * ru * k) =
        3.0 * (pd.nonlinearity.w.asDiagonal() * kt_product(u2, hl));
    right.middleCols(at, ru * ru * k) =
        g.unscale_xi0(pd.xi.diag[0].asDiagonal() * kt_product(v2, hr));
    at += ru * ru * k;
  }
  return {g.solve_k(left), std::move(right)};
}

FactoredAmbient truncation_derivative_adjoint(const FixedRankPoint& y,
                                              const FactoredAmbient& omega, Index rt,
                                              const Metric& g) {
  const Index r = y.rank();
  RLRA_REQUIRE(rt >= 1, "compression rank must be >= 1");
  rt = std::min(rt, r);
  require_spectral_gap(y, rt);
  Matrix lo = omega.core ? Matrix(omega.left * (*omega.core)) : omega.left;
  const Matrix& ro = omega.right;
  AdjointPieces pc = adjoint_pieces(y, lo, ro, rt);
  const Matrix uz = y.U.leftCols(rt), vz = y.V.leftCols(rt);
  const Matrix kuz = g.apply_k(uz);
  const Matrix xvz = g.scale_xi0(vz);

  // K U_Z U_Z^T Omega: regrouped right-first so every piece stays rt wide.
  FactoredAmbient t1(kuz, Matrix(ro * pc.a.transpose()));
  FactoredAmbient t2(Matrix(lo * pc.b), xvz);
  FactoredAmbient t3(Matrix(-kuz * (pc.a * pc.b)), xvz);
  if (rt >= r) return FactoredAmbient::sum({&t1, &t2, &t3});

  Matrix ones = Matrix::Ones(r - rt, rt);
  Matrix bracket4 = (pc.psi.transpose().array() * pc.o21.transpose().array() +
                     (pc.xi.transpose() - ones.transpose()).array() * pc.o12.array())
                        .matrix();
  Matrix bracket5 =
      (pc.psi.array() * pc.o12.transpose().array() + (pc.xi - ones).array() * pc.o21.array())
          .matrix();
  FactoredAmbient t4(Matrix(kuz * bracket4), g.scale_xi0(y.V.rightCols(r - rt)));
  FactoredAmbient t5(Matrix(g.apply_k(y.U.rightCols(r - rt)) * bracket5), xvz);
  return FactoredAmbient::sum({&t1, &t2, &t3, &t4, &t5});
}

FactoredAmbient compressed_nonlinear_gradient(const ProblemData& pd, const Metric& g,
                                              const FixedRankPoint& x, Index rt) {
  RLRA_REQUIRE(pd.nonlinearity.active(), "problem has no nonlinearity");
  RLRA_REQUIRE(rt >= 1, "compression rank must be >= 1");
  const Index r = x.rank();
  rt = std::min(rt, r);
  require_spectral_gap(x, rt);

  // Omega = W T(X)^(.3) Xi_0 in factored form, T(X) the rank-rt truncation.
  const Matrix uz = x.U.leftCols(rt), vz = x.V.leftCols(rt);
  const Matrix phit = uz * x.sigma.head(rt).asDiagonal();
  Matrix u2 = kt_product(phit, phit);
  Matrix v2 = kt_product(vz, vz);
  Matrix lo = pd.nonlinearity.w.asDiagonal() * kt_product(phit, u2);
  Matrix ro = pd.xi.diag[0].asDiagonal() * kt_product(vz, v2);
  AdjointPieces pc = adjoint_pieces(x, lo, ro, rt);

  // K^{-1} (DT)*[Omega] Xi0^{-1} with the K K^{-1} and Xi0 Xi0^{-1} pairs
  // cancelled analytically; only the Omega V_Z V_Z^T piece needs a solve.
  FactoredAmbient g1(uz, Matrix(g.unscale_xi0(ro) * pc.a.transpose()));
  FactoredAmbient g2(g.solve_k(lo * pc.b), vz);
  FactoredAmbient g3(Matrix(-uz * (pc.a * pc.b)), vz);
  if (rt >= r) return FactoredAmbient::sum({&g1, &g2, &g3});

  Matrix ones = Matrix::Ones(r - rt, rt);
  Matrix bracket4 = (pc.psi.transpose().array() * pc.o21.transpose().array() +
                     (pc.xi.transpose() - ones.transpose()).array() * pc.o12.array())
                        .matrix();
  Matrix bracket5 =
      (pc.psi.array() * pc.o12.transpose().array() + (pc.xi - ones).array() * pc.o21.array())
          .matrix();
  FactoredAmbient g4(Matrix(uz * bracket4), x.V.rightCols(r - rt));
  FactoredAmbient g5(Matrix(x.U.rightCols(r - rt) * bracket5), vz);
  return FactoredAmbient::sum({&g1, &g2, &g3, &g4, &g5});
}

TangentVector riemannian_gradient(const ProblemData& pd, const Metric& g,
                                  const FixedRankPoint& x, const ObjectiveConfig& cfg) {
  return project_tangent(x, euclid_gradient(pd, g, x, cfg), g);
}

TangentVector riemannian_hessian(const ProblemData& pd, const Metric& g,
                                 const FixedRankPoint& x, const TangentVector& h,
                                 const FactoredAmbient& grad_ambient,
                                 const ObjectiveConfig& cfg) {
  FactoredAmbient hdir = euclid_hess_apply(pd, g, x, embed(h), cfg);
  return riemannian_hessian_apply(x, h, grad_ambient, hdir, g);
}

TangentVector riemannian_hessian(const ProblemData& pd, const Metric& g,
                                 const FixedRankPoint& x, const TangentVector& h,
                                 const ObjectiveConfig& cfg) {
  return riemannian_hessian(pd, g, x, h, euclid_gradient(pd, g, x, cfg), cfg);
}

}  // namespace rlra
