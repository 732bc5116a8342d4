#pragma once

#include "rlra/factored.hpp"
#include "rlra/metric.hpp"
#include "rlra/point.hpp"
#include "rlra/rng.hpp"
#include "rlra/weighted_svd.hpp"

namespace rlra {

// Metric projection of an ambient factored matrix onto the tangent space at x.
TangentVector project_tangent(const FixedRankPoint& x, const FactoredAmbient& z,
                              const Metric& g);

// Riemannian inner product / norm of tangent vectors (anchors must agree).
double inner(const TangentVector& a, const TangentVector& b, const Metric& g);
double norm(const TangentVector& t, const Metric& g);

// Tangent vector as an ambient factored matrix of width 2r:
// [U M + Up, U] [V, Vp]^T.
FactoredAmbient embed(const TangentVector& t);

// z minus its tangent projection, in factored form (width grows by 2r).
FactoredAmbient project_normal(const FixedRankPoint& x, const FactoredAmbient& z,
                               const Metric& g);

// Retraction by weighted rank-r truncated SVD of X + embed(t). If the step
// collapses the numerical rank below r, the factors are padded with fresh
// K-/Xi0-orthonormal directions and tiny singular values; the returned point
// has padded = true in that case.
FixedRankPoint retract(const FixedRankPoint& x, const TangentVector& t, const Metric& g);

// Vector transport by projection onto the tangent space at `to`.
TangentVector transport(const FixedRankPoint& to, const TangentVector& t, const Metric& g);

// Riemannian Hessian from ambient data: grad is the ambient gradient
// K^{-1} dF(X) Xi0^{-1}, hess_dir the ambient Hessian applied to embed(eta)
// in the same scaling. Throws IllConditionedPoint when sigma is degenerate
// (sigma_i < 1e-14 sigma_1) since the curvature terms need Sigma^{-1}.
TangentVector riemannian_hessian_apply(const FixedRankPoint& x, const TangentVector& eta,
                                      const FactoredAmbient& grad,
                                      const FactoredAmbient& hess_dir, const Metric& g);

// Random rank-r point with K-/Xi0-orthonormal factors and well separated
// singular values sigma_i ~ 2^{-i}.
FixedRankPoint random_point(const Metric& g, Index rank, SplitMix64& rng);

// Random tangent vector at x with entries of order `scale`.
TangentVector random_tangent(const FixedRankPoint& x, const Metric& g, double scale,
                             SplitMix64& rng);

}  // namespace rlra
