#pragma once

// Internal helpers shared by the solver translation units. Not installed.

#include <chrono>
#include <limits>

#include "rlra/solvers.hpp"

namespace rlra::detail {

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

// Ambient gradients wider than this would make the per-iteration residual
// Gram the dominant step cost; beyond the budget the residual is logged only
// on the first and last rows of a solve and at rank-adaptation boundaries.
constexpr Index kResidualWidthBudget = 192;

inline double maybe_residual(const FactoredAmbient& amb, const Metric& g, bool force) {
  if (!force && amb.width() > kResidualWidthBudget)
    return std::numeric_limits<double>::quiet_NaN();
  return p_norm(amb, g);
}

}  // namespace rlra::detail
