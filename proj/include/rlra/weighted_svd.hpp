#pragma once

#include "rlra/point.hpp"

namespace rlra {

// Truncation request for the weighted SVD: a rank cap and/or a relative
// singular-value tolerance (keep sigma_i >= tol * sigma_1; ties kept).
// Independent of both, directions below 1e-14 * sigma_1 count as beyond the
// numerical rank and are dropped with the rank_reduced flag set.
struct TruncationTarget {
  Index rank = -1;   // -1: no rank cap
  double tol = 0.0;  // 0: keep everything above the numerical floor

  static TruncationTarget by_rank(Index r) { return {r, 0.0}; }
  static TruncationTarget by_tol(double t) { return {-1, t}; }
};

// Best rank-target approximation of Z in the P-norm, returned in weighted-SVD
// form. Algorithm: transform with R (R^T R = K) and Xi0^{1/2}, thin QR of
// both slim factors, one small dense SVD of the transformed core, then map
// back through the triangular solves.
FixedRankPoint weighted_truncated_svd(const FactoredAmbient& z, const Metric& g,
                                      TruncationTarget target);

// P-norm of a factored matrix: ||Z||_P = ||R Z Xi0^{1/2}||_F, evaluated
// through k x k Gram products.
double p_norm(const FactoredAmbient& z, const Metric& g);

// <A, B>_P = trace(Xi0 A^T K B) for factored operands.
double p_inner(const FactoredAmbient& a, const FactoredAmbient& b, const Metric& g);

}  // namespace rlra
