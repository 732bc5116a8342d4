#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <vector>

#include "rlra/objective.hpp"

namespace rlra {

// Riemannian conjugate gradient (Fletcher-Reeves with Armijo backtracking).
struct RcgConfig {
  double tol = 1e-6;          // absolute gradient P-norm at which to stop
  Index max_iters = 1000;
  double armijo_c = 1e-4;     // sufficient-decrease constant, in (0, 1)
  double backtrack = 0.5;     // step shrink factor per backtrack
  Index max_backtracks = 50;
};

// Riemannian trust region with truncated CG subproblem solves.
struct RtrConfig {
  double tol = 1e-6;              // gradient P-norm stopping threshold
  Index max_iters = 1000;         // outer iterations
  double delta1 = 1.0;            // initial trust radius
  double delta_max = 1e3;         // radius cap
  double accept_rho = 0.05;       // accept step when rho >= this
  double expand_rho = 0.75;       // expand radius when rho >= this at the boundary
  double shrink_rho = 0.25;       // shrink radius when rho <= this
  double tcg_kappa = 0.1;         // tCG relative residual target
  double tcg_theta = 1.0;         // tCG superlinear exponent
  Index max_inner = 500;          // tCG iteration cap per subproblem
  bool rcg_warmup = true;         // run RCG first until the gradient is small
  double warmup_grad_tol = 1e-3;  // gradient P-norm at which RTR takes over
};

// Outer rank-adaptation loop around a fixed-rank solver.
struct RankAdaptiveConfig {
  Index initial_rank = 1;    // r0
  Index rank_increase = 1;   // r_up, ranks grow by this much per phase
  double tol = 1e-6;         // ambient-gradient P-norm at which to stop
  double epsilon = 1e-14;    // relative sigma^2 mass below which ranks are cut
  Index max_phases = 64;
  enum class Inner { Rcg, Rtr } inner = Inner::Rcg;
  RcgConfig rcg{};
  RtrConfig rtr{};
};

// One logged outer iteration. `residual` is the P-norm of the full ambient
// preconditioned gradient; it is NaN on iterations where computing it would
// dominate the step cost (it is always present on the first and last rows of
// a solve and at rank-adaptation phase boundaries).
struct IterationStat {
  Index iteration = 0;
  double grad_norm = 0.0;  // Riemannian gradient P-norm
  double residual = std::numeric_limits<double>::quiet_NaN();
  double functional = 0.0;
  Index rank = 0;
  double step = 0.0;       // accepted step size (RCG) / trust radius used (RTR)
  Index inner_iters = 0;   // line-search evaluations / tCG iterations
  double seconds = 0.0;    // wall clock since the solve started
};

struct ConvergenceRecord {
  std::vector<IterationStat> stats;

  // Iteration indices must be strictly increasing.
  void append(const IterationStat& s) {
    RLRA_REQUIRE(stats.empty() || s.iteration > stats.back().iteration,
                 "iteration indices must be strictly increasing");
    stats.push_back(s);
  }
  bool empty() const { return stats.empty(); }
  Index size() const { return static_cast<Index>(stats.size()); }
  const IterationStat& back() const {
    RLRA_REQUIRE(!stats.empty(), "empty convergence record");
    return stats.back();
  }
};

struct SolveResult {
  FixedRankPoint x;
  ConvergenceRecord record;
  bool converged = false;
};

// A solver gave up; the exception carries the last iterate and the history
// accumulated so far (shared so the exception stays cheap to copy).
class SolverStall : public Error {
 public:
  explicit SolverStall(const std::string& msg) : Error(msg) {}
  SolverStall(const std::string& msg, SolveResult state)
      : Error(msg), state_(std::make_shared<const SolveResult>(std::move(state))) {}
  const SolveResult* state() const { return state_.get(); }

 private:
  std::shared_ptr<const SolveResult> state_;
};

class LineSearchStalled : public SolverStall {
 public:
  using SolverStall::SolverStall;
};

class TrustRegionStalled : public SolverStall {
 public:
  using SolverStall::SolverStall;
};

class RankExhausted : public SolverStall {
 public:
  using SolverStall::SolverStall;
};

// sum_i <A_i Z Xi_i, Z>_F, the ensemble quadratic form behind the exact step
// length of the quadratic part (positive for nonzero Z when every A(xi_j) is
// SPD).
double ensemble_quadratic_form(const ProblemData& pd, const FactoredAmbient& z);

// beta = (new_norm / old_norm)^2. Throws InvariantViolation when old_norm is
// zero (the caller should have stopped at a zero gradient).
double fletcher_reeves_beta(double new_norm, double old_norm);

// Backtracking line search on f(alpha) = functional along the search ray.
// f0 = f(0), g0 = directional derivative at 0 (must be negative), alpha0 the
// trial step. Accepts the first alpha = alpha0 * backtrack^k satisfying the
// Armijo condition f(alpha) <= f0 + c * alpha * g0; throws LineSearchStalled
// when no k <= max_backtracks works.
struct ArmijoResult {
  double alpha = 0.0;
  Index evaluations = 0;
  double f_new = 0.0;
};
ArmijoResult armijo_linesearch(const std::function<double(double)>& f_along, double f0,
                               double g0, double alpha0, const RcgConfig& cfg);

// Steihaug truncated CG for the trust-region subproblem
//   min_eta <grad, eta>_P + 1/2 <hess(eta), eta>_P  s.t. ||eta||_P <= delta.
// Stops on the kappa/theta residual test, on hitting the boundary (negative
// curvature or an overlong step, with the exact boundary crossing), or on
// MaxInner (iteration cap, or conjugacy numerically exhausted). Iterate
// P-norms are nondecreasing and the model decrease is always >= 0; both are
// asserted internally.
enum class TcgStop { Converged, NegativeCurvature, Boundary, MaxInner };
struct TcgResult {
  TangentVector eta;
  TcgStop stop = TcgStop::Converged;
  Index iterations = 0;
  double model_decrease = 0.0;  // m(0) - m(eta)
  double eta_norm = 0.0;        // ||eta||_P
};
using HessianApply = std::function<TangentVector(const TangentVector&)>;
TcgResult tcg_subproblem(const TangentVector& grad, const HessianApply& hess, double delta,
                         double kappa, double theta, Index max_inner, const Metric& g);

// Rank-r_up correction in the normal space: Y is the best rank-r_up
// approximation (P-norm) of the normal component of the negative ambient
// gradient, alpha the closed-form minimizer of the quadratic part along Y.
// zero is set (with Y = 0, alpha = 0) when the gradient is fully tangent.
struct NormalCorrection {
  FactoredAmbient y;
  double alpha = 0.0;
  bool zero = false;
};
NormalCorrection normal_correction(const ProblemData& pd, const Metric& g,
                                   const FixedRankPoint& x, Index r_up,
                                   const ObjectiveConfig& obj = {});

// Fixed-rank solvers. Both stop when the Riemannian gradient P-norm falls
// below cfg.tol or the iteration cap is reached (converged flag tells which);
// the record always holds the initial state plus one row per iteration.
SolveResult rcg_solve(const ProblemData& pd, const Metric& g, const FixedRankPoint& x0,
                      const RcgConfig& cfg = {}, const ObjectiveConfig& obj = {});
SolveResult rtr_solve(const ProblemData& pd, const Metric& g, const FixedRankPoint& x0,
                      const RtrConfig& cfg = {}, const ObjectiveConfig& obj = {});

// Alternates fixed-rank solves with rank reduction (trailing sigma^2 mass
// under epsilon) and rank increase by r_up (warm start X + alpha Y along the
// normal correction) until the ambient-gradient P-norm falls below tol.
// Throws RankExhausted when that cannot happen below rank min(m, n). The
// overload without a start point draws a seeded random rank-r0 point.
SolveResult rank_adaptive_solve(const ProblemData& pd, const Metric& g,
                                const FixedRankPoint& x0, const RankAdaptiveConfig& cfg = {},
                                const ObjectiveConfig& obj = {});
SolveResult rank_adaptive_solve(const ProblemData& pd, const Metric& g,
                                const RankAdaptiveConfig& cfg = {},
                                const ObjectiveConfig& obj = {}, std::uint64_t seed = 0);

}  // namespace rlra
