#include "rlra/problem.hpp"

#include "rlra/rng.hpp"

namespace rlra {

SampleSet sample_parameters(Index n, Index p, std::uint64_t seed) {
  RLRA_REQUIRE(n >= 1 && p >= 0, "need at least one sample");
  SplitMix64 rng(seed);
  SampleSet s;
  s.samples.resize(p, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < p; ++i) s.samples(i, j) = rng.uniform_pm1();
  s.weights = Vector::Constant(n, 1.0 / static_cast<double>(n));
  return s;
}

void validate_samples(const SampleSet& s) {
  if (s.n() == 0) throw InvariantViolation("empty sample set");
  if (s.weights.size() != s.n())
    throw InvariantViolation("weight count does not match sample count");
  if (!(s.weights.array() > 0.0).all())
    throw InvariantViolation("sample weights must be strictly positive");
  if ((s.samples.array().abs() > 1.0).any())
    throw InvariantViolation("samples must lie in [-1,1]^p");
}

XiMatrices build_xi_matrices(const SampleSet& s) {
  validate_samples(s);
  XiMatrices xi;
  xi.diag.resize(s.p() + 1);
  xi.diag[0] = s.weights;
  for (Index i = 1; i <= s.p(); ++i)
    xi.diag[i] = s.weights.cwiseProduct(s.samples.row(i - 1).transpose());
  return xi;
}

std::vector<Matrix> apply_affine_block(const AffineOperator& op, const Matrix& phi) {
  RLRA_REQUIRE(!op.terms.empty(), "empty affine operator");
  RLRA_REQUIRE(phi.rows() == op.dim(), "operator/block dimension mismatch");
  std::vector<Matrix> out;
  out.reserve(op.terms.size());
  for (const auto& t : op.terms) out.push_back(t.mat * phi);
  return out;
}

SparseSymMatrix affine_combine(const AffineOperator& op, const Vector& xi) {
  RLRA_REQUIRE(!op.terms.empty(), "empty affine operator");
  RLRA_REQUIRE(xi.size() == op.p(), "parameter dimension mismatch");
  SparseSymMatrix out;
  out.mat = op.terms[0].mat;
  for (Index i = 0; i < xi.size(); ++i) out.mat += xi(i) * op.terms[i + 1].mat;
  return out;
}

NonlinearitySpec NonlinearitySpec::lumped_quartic(Vector w) {
  RLRA_REQUIRE(w.size() > 0, "empty nonlinearity weights");
  NonlinearitySpec s;
  s.kind = Kind::LumpedQuartic;
  s.w = std::move(w);
  if (!(s.w.array() > 0.0).all())
    throw InvariantViolation("nonlinearity weights must be strictly positive");
  return s;
}

void validate_problem(const ProblemData& pd) {
  const Index m = pd.op.dim();
  const Index n = pd.samples.n();
  if (pd.op.terms.empty()) throw InvariantViolation("problem has no operator terms");
  for (const auto& t : pd.op.terms) {
    if (t.dim() != m) throw InvariantViolation("operator terms differ in dimension");
    validate_symmetric(t);
  }
  validate_samples(pd.samples);
  if (pd.op.p() != pd.samples.p())
    throw InvariantViolation("operator term count does not match parameter dimension");
  if (pd.xi.count() != pd.samples.p() + 1 || pd.xi.n() != n)
    throw InvariantViolation("sample matrices inconsistent with the sample set");
  if (pd.b.rows() != m || pd.b.cols() != n)
    throw InvariantViolation("right-hand side dimensions inconsistent");
  if (pd.k.dim() != m) throw InvariantViolation("preconditioner dimension inconsistent");
  if (pd.kfac == nullptr || pd.kfac->dim() != m)
    throw InvariantViolation("missing or inconsistent preconditioner factorization");
  if (pd.nonlinearity.active() && pd.nonlinearity.w.size() != m)
    throw InvariantViolation("nonlinearity weight dimension inconsistent");
}

}  // namespace rlra
