#include "rlra/sparse.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>

namespace rlra {

namespace detail {
void require_failed(const char* condition, const char* file, int line,
                    const std::string& message) {
  std::fprintf(stderr, "rlra: requirement failed: %s (%s:%d): %s\n", condition, file,
               line, message.c_str());
  std::abort();
}
}  // namespace detail

SparseSymMatrix make_sparse_sym(Index dim, const std::vector<Eigen::Triplet<double>>& entries) {
  RLRA_REQUIRE(dim > 0, "matrix dimension must be positive");
  // Accumulate on canonical (min,max) index pairs, then mirror once, so both
  // triangles end up exactly equal.
  std::vector<std::pair<std::int64_t, double>> acc;
  acc.reserve(entries.size());
  for (const auto& t : entries) {
    RLRA_REQUIRE(t.row() >= 0 && t.row() < dim && t.col() >= 0 && t.col() < dim,
                 "triplet index out of range");
    const std::int64_t i = std::min(t.row(), t.col());
    const std::int64_t j = std::max(t.row(), t.col());
    acc.emplace_back(i * dim + j, t.value());
  }
  std::sort(acc.begin(), acc.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<Eigen::Triplet<double>> sym;
  sym.reserve(2 * acc.size());
  for (std::size_t s = 0; s < acc.size();) {
    const std::int64_t key = acc[s].first;
    double v = 0.0;
    for (; s < acc.size() && acc[s].first == key; ++s) v += acc[s].second;
    if (v == 0.0) continue;
    const Index i = static_cast<Index>(key / dim);
    const Index j = static_cast<Index>(key % dim);
    sym.emplace_back(i, j, v);
    if (i != j) sym.emplace_back(j, i, v);
  }
  SparseSymMatrix out;
  out.mat.resize(dim, dim);
  out.mat.setFromTriplets(sym.begin(), sym.end());
  out.mat.makeCompressed();
  return out;
}

SparseSymMatrix sparse_identity(Index dim) {
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(dim);
  for (Index i = 0; i < dim; ++i) t.emplace_back(i, i, 1.0);
  return make_sparse_sym(dim, t);
}

SparseSymMatrix sparse_diagonal(const Vector& d) {
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(d.size());
  for (Index i = 0; i < d.size(); ++i) t.emplace_back(i, i, d(i));
  return make_sparse_sym(d.size(), t);
}

void validate_symmetric(const SparseSymMatrix& a) {
  SparseMatrix diff = SparseMatrix(a.mat.transpose()) - a.mat;
  if (diff.coeffs().size() > 0 && diff.coeffs().cwiseAbs().maxCoeff() != 0.0)
    throw InvariantViolation("sparse matrix is not exactly symmetric");
}

SpdFactorization::SpdFactorization(const SparseSymMatrix& a) : a_(a.mat) {
  RLRA_REQUIRE(a.mat.rows() == a.mat.cols(), "matrix must be square");
  Eigen::SparseMatrix<double> acm(a.mat);
  ldlt_.compute(acm);
  if (ldlt_.info() != Eigen::Success) throw NotPositiveDefinite(0);
  const Vector d = ldlt_.vectorD();
  perm_ = ldlt_.permutationP();
  for (Index k = 0; k < d.size(); ++k) {
    if (!(d(k) > 0.0)) {
      // Elimination step k touches original row/column perm^{-1}(k); report
      // it 1-based.
      Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic> pinv = perm_.inverse();
      throw NotPositiveDefinite(pinv.indices()(k) + 1);
    }
  }
  l_ = ldlt_.matrixL();
  lt_ = l_.transpose();
  sqrt_d_ = d.cwiseSqrt();
}

Matrix SpdFactorization::apply(const Matrix& c) const {
  RLRA_REQUIRE(c.rows() == dim(), "dimension mismatch in apply");
  return a_ * c;
}

Matrix SpdFactorization::solve(const Matrix& c) const {
  RLRA_REQUIRE(c.rows() == dim(), "dimension mismatch in solve");
  return ldlt_.solve(c);
}

Matrix SpdFactorization::rk_apply(const Matrix& c) const {
  RLRA_REQUIRE(c.rows() == dim(), "dimension mismatch in rk_apply");
  Matrix t = perm_ * c;
  t = lt_ * t;
  t.array().colwise() *= sqrt_d_.array();
  return t;
}

Matrix SpdFactorization::rk_solve(const Matrix& c) const {
  RLRA_REQUIRE(c.rows() == dim(), "dimension mismatch in rk_solve");
  Matrix t = c;
  t.array().colwise() /= sqrt_d_.array();
  lt_.triangularView<Eigen::Upper>().solveInPlace(t);
  return perm_.inverse() * t;
}

std::shared_ptr<const SpdFactorization> spd_factorize(const SparseSymMatrix& a) {
  return std::make_shared<const SpdFactorization>(a);
}

Matrix spd_solve(const SpdFactorization& f, const Matrix& c) { return f.solve(c); }

}  // namespace rlra
