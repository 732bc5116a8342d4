#pragma once

#include "rlra/geometry.hpp"
#include "rlra/problem.hpp"

namespace rlra {

// How the quartic nonlinearity is evaluated: exact through Khatri-Rao powers
// of the factors, or on a rank-rt truncation of the iterate (gradient via the
// adjoint of the truncation derivative). rt = -1 resolves to ceil(r/2).
struct ObjectiveConfig {
  enum class NonlinearMode { ExactKhatriRao, Compressed };
  NonlinearMode mode = NonlinearMode::ExactKhatriRao;
  Index compression_rank = -1;

  static ObjectiveConfig exact() { return {}; }
  static ObjectiveConfig compressed(Index rt = -1) {
    RLRA_REQUIRE(rt == -1 || rt >= 1, "compression rank must be >= 1");
    return {NonlinearMode::Compressed, rt};
  }
  bool is_compressed() const { return mode == NonlinearMode::Compressed; }
  Index resolve_rt(Index r) const {
    if (!is_compressed()) return r;
    const Index rt = compression_rank > 0 ? compression_rank : (r + 1) / 2;
    return std::max<Index>(1, std::min(rt, r));
  }
};

// F(X) = 1/2 sum_i trace(X^T A_i X Xi_i) - trace(X^T B Xi_0) + quartic term,
// the quartic evaluated exactly through Gram products of the Khatri-Rao
// factors (never materializing r^4 columns) or on the truncated iterate.
double eval_functional(const ProblemData& pd, const Metric& g, const FixedRankPoint& x,
                       const ObjectiveConfig& cfg = {});

// Factors of the k-th Hadamard power of X, widths r^2, r^3, r^4.
FactoredAmbient hadamard_power_factors(const FixedRankPoint& x, int k);

// Ambient gradient in the preconditioned scaling, K^{-1} dF(X) Xi0^{-1},
// factored with width (p+1)r + width(B) + r^3 (exact) or + 3rt + 2r
// (compressed).
FactoredAmbient euclid_gradient(const ProblemData& pd, const Metric& g,
                                const FixedRankPoint& x, const ObjectiveConfig& cfg = {});

// Directional derivative of the gradient along an ambient factored H, same
// scaling: K^{-1}[sum_i A_i H Xi_i + 3 W (X^(.2) (.) H) Xi_0] Xi0^{-1}. In
// compressed mode the Hadamard factor uses the truncated iterate and the
// truncation is frozen (Gauss-Newton style).
FactoredAmbient euclid_hess_apply(const ProblemData& pd, const Metric& g,
                                  const FixedRankPoint& x, const FactoredAmbient& h,
                                  const ObjectiveConfig& cfg = {});

// Frobenius adjoint of the derivative of the rank-rt weighted truncation at
// the rank-r point y, applied to Omega. Throws NearDegenerateSpectrum when
// sigma_rt - sigma_rt+1 < 1e-10 sigma_1.
FactoredAmbient truncation_derivative_adjoint(const FixedRankPoint& y,
                                              const FactoredAmbient& omega, Index rt,
                                              const Metric& g);

// Nonlinear block of the compressed gradient: K^{-1} (DT_rt)*[W T(X)^(.3) Xi_0]
// Xi0^{-1}, width <= 3rt + 2(r - rt).
FactoredAmbient compressed_nonlinear_gradient(const ProblemData& pd, const Metric& g,
                                              const FixedRankPoint& x, Index rt);

// Tangent projection of the ambient gradient; its P-norm is the convergence
// residual all solvers report.
TangentVector riemannian_gradient(const ProblemData& pd, const Metric& g,
                                  const FixedRankPoint& x, const ObjectiveConfig& cfg = {});

// Full Riemannian Hessian along the tangent direction h (projection of the
// Euclidean Hessian plus the curvature terms). The overload taking the
// ambient gradient avoids recomputing it on every application.
TangentVector riemannian_hessian(const ProblemData& pd, const Metric& g,
                                 const FixedRankPoint& x, const TangentVector& h,
                                 const FactoredAmbient& grad_ambient,
                                 const ObjectiveConfig& cfg = {});
TangentVector riemannian_hessian(const ProblemData& pd, const Metric& g,
                                 const FixedRankPoint& x, const TangentVector& h,
                                 const ObjectiveConfig& cfg = {});

}  // namespace rlra
