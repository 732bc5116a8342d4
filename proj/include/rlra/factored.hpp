#pragma once

#include <optional>
#include <vector>

#include "rlra/types.hpp"

namespace rlra {

// Ambient m-by-n matrix held in factored form: left * core * right^T with
// left m-by-k, core k-by-k2 (identity when absent), right n-by-k2. Sums of
// factored matrices concatenate factors; the value is never densified except
// on small test problems.
struct FactoredAmbient {
  Matrix left;
  Matrix right;
  std::optional<Matrix> core;

  FactoredAmbient() = default;
  FactoredAmbient(Matrix l, Matrix r) : left(std::move(l)), right(std::move(r)) {
    RLRA_REQUIRE(left.cols() == right.cols(), "factor widths differ");
  }
  FactoredAmbient(Matrix l, Matrix c, Matrix r)
      : left(std::move(l)), right(std::move(r)), core(std::move(c)) {
    RLRA_REQUIRE(left.cols() == core->rows() && core->cols() == right.cols(),
                 "core dimensions inconsistent with factors");
  }

  Index rows() const { return left.rows(); }
  Index cols() const { return right.rows(); }
  // Upper bound on the rank carried by the factorization.
  Index width() const { return std::min(left.cols(), right.cols()); }

  // Multiplies the core into the left factor; afterwards value = left*right^T.
  void absorb_core() {
    if (core) {
      left = left * (*core);
      core.reset();
    }
  }

  Matrix dense() const {
    if (core) return left * (*core) * right.transpose();
    return left * right.transpose();
  }

  // (left core right^T) * y
  Matrix apply(const Matrix& y) const {
    RLRA_REQUIRE(y.rows() == cols(), "dimension mismatch in factored apply");
    Matrix t = right.transpose() * y;
    if (core) t = (*core) * t;
    return left * t;
  }

  // (left core right^T)^T * y
  Matrix apply_transposed(const Matrix& y) const {
    RLRA_REQUIRE(y.rows() == rows(), "dimension mismatch in factored apply");
    Matrix t = left.transpose() * y;
    if (core) t = core->transpose() * t;
    return right * t;
  }

  FactoredAmbient scaled(double s) const {
    FactoredAmbient out = *this;
    out.left *= s;
    return out;
  }

  // Sum of factored matrices: factors concatenated, cores absorbed.
  static FactoredAmbient sum(const std::vector<const FactoredAmbient*>& parts) {
    RLRA_REQUIRE(!parts.empty(), "empty factored sum");
    Index m = parts[0]->rows(), n = parts[0]->cols();
    Index k = 0;
    for (const auto* p : parts) {
      RLRA_REQUIRE(p->rows() == m && p->cols() == n, "factored sum shape mismatch");
      k += p->right.cols();
    }
    FactoredAmbient out;
    out.left.resize(m, k);
    out.right.resize(n, k);
    Index at = 0;
    for (const auto* p : parts) {
      const Index w = p->right.cols();
      out.left.middleCols(at, w) = p->core ? Matrix(p->left * (*p->core)) : p->left;
      out.right.middleCols(at, w) = p->right;
      at += w;
    }
    return out;
  }
};

}  // namespace rlra
