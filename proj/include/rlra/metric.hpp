#pragma once

#include <memory>

#include "rlra/sparse.hpp"

namespace rlra {

// Geometry weights: <A, C>_P = trace(Xi0 A^T K C). The preconditioned metric
// carries the problem's K factorization and sample weights; the Frobenius
// metric is the identity pair (K = I, Xi0 = I) and skips all solves.
class Metric {
 public:
  static Metric preconditioned(std::shared_ptr<const SpdFactorization> kfac, Vector xi0) {
    RLRA_REQUIRE(kfac != nullptr, "null factorization");
    RLRA_REQUIRE((xi0.array() > 0.0).all(), "Xi0 entries must be positive");
    Metric g;
    g.kfac_ = std::move(kfac);
    g.m_ = g.kfac_->dim();
    g.set_xi0(std::move(xi0));
    return g;
  }

  static Metric frobenius(Index m, Index n) {
    Metric g;
    g.m_ = m;
    g.set_xi0(Vector::Ones(n));
    return g;
  }

  // Identity K but the problem's sample weights kept, so gradient norms stay
  // on the same scale as the preconditioned metric and iteration counts of
  // the two variants compare directly.
  static Metric unpreconditioned(Index m, Vector xi0) {
    RLRA_REQUIRE((xi0.array() > 0.0).all(), "Xi0 entries must be positive");
    Metric g;
    g.m_ = m;
    g.set_xi0(std::move(xi0));
    return g;
  }

  Index rows() const { return m_; }
  Index cols() const { return xi0_.size(); }
  bool identity_k() const { return kfac_ == nullptr; }
  bool identity_xi0() const { return identity_xi0_; }
  const SpdFactorization* kfac() const { return kfac_.get(); }

  Matrix apply_k(const Matrix& y) const { return kfac_ ? kfac_->apply(y) : y; }
  Matrix solve_k(const Matrix& y) const { return kfac_ ? kfac_->solve(y) : y; }
  Matrix rk_apply(const Matrix& y) const { return kfac_ ? kfac_->rk_apply(y) : y; }
  Matrix rk_solve(const Matrix& y) const { return kfac_ ? kfac_->rk_solve(y) : y; }

  const Vector& xi0() const { return xi0_; }
  const Vector& sqrt_xi0() const { return sqrt_xi0_; }

  // Rows of y scaled by xi0 (y has n rows).
  Matrix scale_xi0(const Matrix& y) const {
    if (identity_xi0_) return y;
    return xi0_.asDiagonal() * y;
  }
  Matrix unscale_xi0(const Matrix& y) const {
    if (identity_xi0_) return y;
    return xi0_.cwiseInverse().asDiagonal() * y;
  }

 private:
  void set_xi0(Vector v) {
    xi0_ = std::move(v);
    sqrt_xi0_ = xi0_.cwiseSqrt();
    identity_xi0_ = (xi0_.array() == 1.0).all();
  }

  std::shared_ptr<const SpdFactorization> kfac_;
  Index m_ = 0;
  Vector xi0_;
  Vector sqrt_xi0_;
  bool identity_xi0_ = false;
};

}  // namespace rlra
