#pragma once

#include "rlra/factored.hpp"
#include "rlra/metric.hpp"

namespace rlra {

// Point on the rank-r manifold in weighted-SVD form: X = U diag(sigma) V^T
// with U^T K U = I, V^T Xi0 V = I and sigma decreasing positive.
struct FixedRankPoint {
  Matrix U;      // m x r
  Vector sigma;  // r, decreasing, positive
  Matrix V;      // n x r
  // Metadata: the factorization could not supply the requested rank, or the
  // retraction had to pad collapsed directions.
  bool rank_reduced = false;
  bool padded = false;

  Index rows() const { return U.rows(); }
  Index cols() const { return V.rows(); }
  Index rank() const { return sigma.size(); }

  Matrix phi() const { return U * sigma.asDiagonal(); }  // left factor of X = Phi V^T
  Matrix dense() const { return U * sigma.asDiagonal() * V.transpose(); }
  FactoredAmbient factored() const { return FactoredAmbient(phi(), V); }
};

// Tangent vector in gauge-fixed triple form, anchored at a point by
// reference identity. Arithmetic across different anchors is a programming
// error and aborts.
struct TangentVector {
  const FixedRankPoint* anchor = nullptr;
  Matrix M;   // r x r
  Matrix Up;  // m x r, U^T K Up = 0
  Matrix Vp;  // n x r, V^T Xi0 Vp = 0

  static TangentVector zero(const FixedRankPoint& x) {
    TangentVector t;
    t.anchor = &x;
    t.M = Matrix::Zero(x.rank(), x.rank());
    t.Up = Matrix::Zero(x.rows(), x.rank());
    t.Vp = Matrix::Zero(x.cols(), x.rank());
    return t;
  }

  TangentVector& operator+=(const TangentVector& o) {
    RLRA_REQUIRE(anchor == o.anchor, "tangent arithmetic across different anchors");
    M += o.M;
    Up += o.Up;
    Vp += o.Vp;
    return *this;
  }
  TangentVector& operator-=(const TangentVector& o) {
    RLRA_REQUIRE(anchor == o.anchor, "tangent arithmetic across different anchors");
    M -= o.M;
    Up -= o.Up;
    Vp -= o.Vp;
    return *this;
  }
  TangentVector& operator*=(double s) {
    M *= s;
    Up *= s;
    Vp *= s;
    return *this;
  }
  friend TangentVector operator+(TangentVector a, const TangentVector& b) { return a += b; }
  friend TangentVector operator-(TangentVector a, const TangentVector& b) { return a -= b; }
  friend TangentVector operator*(double s, TangentVector a) { return a *= s; }
};

// Residuals of the weighted-orthogonality invariants; throws
// InvariantViolation beyond tol.
void validate_point(const Metric& g, const FixedRankPoint& x, double tol = 1e-10);
void validate_tangent(const Metric& g, const TangentVector& t, double tol = 1e-10);

// Largest invariant residual (used by the fuzz tests).
double point_invariant_residual(const Metric& g, const FixedRankPoint& x);
double tangent_gauge_residual(const Metric& g, const TangentVector& t);

}  // namespace rlra
