#pragma once

#include <memory>
#include <vector>

#include "rlra/types.hpp"

namespace rlra {

// Square symmetric sparse matrix, both triangles stored, compressed row
// layout. Built through make_sparse_sym so that a_ij == a_ji holds exactly:
// off-diagonal contributions are accumulated on the canonical (min,max) pair
// and mirrored once.
struct SparseSymMatrix {
  SparseMatrix mat;
  Index dim() const { return mat.rows(); }
};

SparseSymMatrix make_sparse_sym(Index dim, const std::vector<Eigen::Triplet<double>>& entries);
SparseSymMatrix sparse_identity(Index dim);
SparseSymMatrix sparse_diagonal(const Vector& d);

// Throws InvariantViolation if the stored matrix is not exactly symmetric.
void validate_symmetric(const SparseSymMatrix& a);

// Sparse LDL^T factorization of an SPD matrix with an AMD fill-reducing
// ordering, computed once and reused. Besides solves it exposes the
// triangular transform R with R^T R = A (R = D^{1/2} L^T P), which realizes
// P-norms and the weighted SVD. All methods are const and reentrant.
class SpdFactorization {
 public:
  explicit SpdFactorization(const SparseSymMatrix& a);

  Index dim() const { return a_.rows(); }
  const SparseMatrix& matrix() const { return a_; }

  Matrix apply(const Matrix& c) const;     // A c
  Matrix solve(const Matrix& c) const;     // A^{-1} c
  Matrix rk_apply(const Matrix& c) const;  // R c
  Matrix rk_solve(const Matrix& c) const;  // R^{-1} c

 private:
  SparseMatrix a_;  // row-major copy for products
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
  Eigen::SparseMatrix<double> l_;       // unit lower factor
  Eigen::SparseMatrix<double> lt_;      // its transpose
  Vector sqrt_d_;
  Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic> perm_;  // P: A -> P A P^T
};

std::shared_ptr<const SpdFactorization> spd_factorize(const SparseSymMatrix& a);
Matrix spd_solve(const SpdFactorization& f, const Matrix& c);

}  // namespace rlra
