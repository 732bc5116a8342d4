#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "rlra/factored.hpp"
#include "rlra/metric.hpp"
#include "rlra/sparse.hpp"

namespace rlra {

// Parameter samples xi_1..xi_n in [-1,1]^p with positive weights m_j
// (defaulting to 1/n, so they sum to one).
struct SampleSet {
  Matrix samples;  // p x n
  Vector weights;  // n

  Index p() const { return samples.rows(); }
  Index n() const { return samples.cols(); }
};

// i.i.d. uniform draws on [-1,1]^p from the documented SplitMix64 sequence;
// sample-major draw order, weights 1/n.
SampleSet sample_parameters(Index n, Index p, std::uint64_t seed);

void validate_samples(const SampleSet& s);

// Diagonals of the sample matrices: diag[0] = (m_j), diag[i] = (m_j (xi_j)_i).
struct XiMatrices {
  std::vector<Vector> diag;

  Index count() const { return static_cast<Index>(diag.size()); }  // p + 1
  Index n() const { return diag.empty() ? 0 : diag.front().size(); }
};

XiMatrices build_xi_matrices(const SampleSet& s);

// Affine operator A(xi) = A_0 + sum_i xi_i A_i; all terms symmetric with the
// same dimension, A_0 SPD.
struct AffineOperator {
  std::vector<SparseSymMatrix> terms;  // p + 1

  Index dim() const { return terms.empty() ? 0 : terms.front().dim(); }
  Index p() const { return static_cast<Index>(terms.size()) - 1; }
};

// [A_0 Phi, ..., A_p Phi]
std::vector<Matrix> apply_affine_block(const AffineOperator& op, const Matrix& phi);

// A_0 + sum_i xi_i A_i for one parameter value.
SparseSymMatrix affine_combine(const AffineOperator& op, const Vector& xi);

// Nonlinearity g(x) = W x^(.3) with mass-lumped weights W = diag(w), or none.
struct NonlinearitySpec {
  enum class Kind { None, LumpedQuartic };
  Kind kind = Kind::None;
  Vector w;  // m, strictly positive when present

  static NonlinearitySpec none() { return {}; }
  static NonlinearitySpec lumped_quartic(Vector w);
  bool active() const { return kind == Kind::LumpedQuartic; }
};

// The full discretized problem: operator, samples, factored right-hand side,
// preconditioner K with its factorization, nonlinearity. Immutable after
// construction and shareable across threads.
struct ProblemData {
  AffineOperator op;
  SampleSet samples;
  XiMatrices xi;
  FactoredAmbient b;
  SparseSymMatrix k;
  std::shared_ptr<const SpdFactorization> kfac;
  NonlinearitySpec nonlinearity;

  Index rows() const { return op.dim(); }
  Index cols() const { return samples.n(); }
  Metric metric() const { return Metric::preconditioned(kfac, xi.diag.at(0)); }
};

// Cross-field dimensional consistency; throws InvariantViolation.
void validate_problem(const ProblemData& pd);

}  // namespace rlra
