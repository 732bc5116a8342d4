#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace rlra {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;  // dense blocks, column-major
using Vector = Eigen::VectorXd;
// Symmetric sparse matrices store both triangles in compressed row layout.
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An allegedly SPD matrix produced a non-positive pivot during factorization.
// pivot_index is 1-based in the original (unpermuted) numbering; 0 when the
// factorization broke down before the offending pivot could be identified.
class NotPositiveDefinite : public Error {
 public:
  explicit NotPositiveDefinite(Index pivot_index_1based)
      : Error("matrix is not positive definite, pivot index " +
              std::to_string(pivot_index_1based)),
        pivot_index(pivot_index_1based) {}
  Index pivot_index;
};

// A fixed-rank point whose trailing singular values are too small (relative
// to the leading one) for the geometry operations to be reliable.
class IllConditionedPoint : public Error {
 public:
  using Error::Error;
};

// The compressed-objective truncation requires a spectral gap at the split
// rank; thrown when sigma_rt and sigma_rt+1 nearly coincide.
class NearDegenerateSpectrum : public Error {
 public:
  using Error::Error;
};

// A structural invariant of a domain type failed a runtime check.
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

namespace detail {
[[noreturn]] void require_failed(const char* condition, const char* file, int line,
                                 const std::string& message);
}  // namespace detail

// Programming errors (dimension mismatches, cross-anchor tangent arithmetic)
// abort; they are not recoverable conditions. Active in all build types.
#define RLRA_REQUIRE(cond, msg)                                              \
  do {                                                                       \
    if (!(cond)) ::rlra::detail::require_failed(#cond, __FILE__, __LINE__, (msg)); \
  } while (0)

}  // namespace rlra
