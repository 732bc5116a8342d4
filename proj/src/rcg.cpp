#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>

#include "rlra/solvers.hpp"
#include "solver_detail.hpp"

namespace rlra {

double ensemble_quadratic_form(const ProblemData& pd, const FactoredAmbient& z) {
  RLRA_REQUIRE(z.rows() == pd.rows() && z.cols() == pd.cols(),
               "factored matrix does not match the problem dimensions");
  const Matrix l = z.core ? Matrix(z.left * (*z.core)) : z.left;
  const std::vector<Matrix> blocks = apply_affine_block(pd.op, l);
  double val = 0.0;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const Matrix gl = l.transpose() * blocks[i];
    const Matrix gr = z.right.transpose() * (pd.xi.diag[i].asDiagonal() * z.right);
    val += (gl.array() * gr.array()).sum();  // both Gram factors are symmetric
  }
  return val;
}

double fletcher_reeves_beta(double new_norm, double old_norm) {
  RLRA_REQUIRE(new_norm >= 0.0 && old_norm >= 0.0, "gradient norms must be nonnegative");
  if (old_norm == 0.0)
    throw InvariantViolation("fletcher-reeves update with a zero previous gradient norm");
  const double q = new_norm / old_norm;
  return q * q;
}

ArmijoResult armijo_linesearch(const std::function<double(double)>& f_along, double f0,
                               double g0, double alpha0, const RcgConfig& cfg) {
  RLRA_REQUIRE(g0 < 0.0, "line search requires a descent direction");
  RLRA_REQUIRE(alpha0 > 0.0, "initial step must be positive");
  RLRA_REQUIRE(cfg.armijo_c > 0.0 && cfg.armijo_c < 1.0, "armijo constant must be in (0, 1)");
  RLRA_REQUIRE(cfg.backtrack > 0.0 && cfg.backtrack < 1.0, "backtrack factor must be in (0, 1)");
  ArmijoResult out;
  double alpha = alpha0;
  for (Index k = 0; k <= cfg.max_backtracks; ++k) {
    const double fa = f_along(alpha);
    ++out.evaluations;
    if (fa <= f0 + cfg.armijo_c * alpha * g0) {
      out.alpha = alpha;
      out.f_new = fa;
      return out;
    }
    alpha *= cfg.backtrack;
  }
  throw LineSearchStalled("line search found no acceptable step within " +
                          std::to_string(cfg.max_backtracks) + " backtracks");
}

SolveResult rcg_solve(const ProblemData& pd, const Metric& g, const FixedRankPoint& x0,
                      const RcgConfig& cfg, const ObjectiveConfig& obj) {
  RLRA_REQUIRE(cfg.tol > 0.0, "gradient tolerance must be positive");
  RLRA_REQUIRE(cfg.max_iters >= 0, "iteration cap must be nonnegative");
  detail::Stopwatch clock;

  auto cur = std::make_unique<FixedRankPoint>(x0);
  FactoredAmbient amb = euclid_gradient(pd, g, *cur, obj);
  TangentVector grad = project_tangent(*cur, amb, g);
  double gn = norm(grad, g);
  double f = eval_functional(pd, g, *cur, obj);

  SolveResult out;
  auto log_row = [&](Index it, double step, Index inner, bool force_residual) {
    IterationStat st;
    st.iteration = it;
    st.grad_norm = gn;
    st.residual = detail::maybe_residual(amb, g, force_residual);
    st.functional = f;
    st.rank = cur->rank();
    st.step = step;
    st.inner_iters = inner;
    st.seconds = clock.seconds();
    out.record.append(st);
  };
  log_row(0, 0.0, 0, true);

  TangentVector dir = -1.0 * grad;
  bool dir_is_steepest = true;
  Index it = 0;
  while (gn > cfg.tol && it < cfg.max_iters) {
    double g0 = inner(dir, grad, g);
    if (g0 >= 0.0 && !dir_is_steepest) {  // conjugacy lost: restart
      dir = -1.0 * grad;
      dir_is_steepest = true;
      g0 = -gn * gn;
    }
    // Exact minimizer of the quadratic part along the ray as the trial step.
    auto initial_step = [&] {
      const double denom = ensemble_quadratic_form(pd, embed(dir));
      return denom > 0.0 ? std::clamp(-g0 / denom, 1e-8, 1e8) : 1.0;
    };

    std::optional<FixedRankPoint> trial;
    auto f_along = [&](double a) {
      trial = retract(*cur, a * dir, g);
      return eval_functional(pd, g, *trial, obj);
    };
    // Decreases below the floating-point resolution of f cannot be certified
    // by comparing function values, so once the model predicts less than that
    // the backtracking search would only filter evaluation noise. Gradients
    // stay accurate there: switch to steepest descent with one secant step on
    // the directional derivative, which also captures the retraction
    // curvature the quadratic model cannot see.
    const double f_floor =
        100.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(f));
    ArmijoResult ar;
    for (;;) {
      const double alpha0 = initial_step();
      if (-0.5 * alpha0 * g0 <= f_floor) {
        if (!dir_is_steepest) {  // momentum is noise-driven here: drop it
          dir = -1.0 * grad;
          dir_is_steepest = true;
          g0 = -gn * gn;
          continue;
        }
        trial = retract(*cur, alpha0 * dir, g);
        const FactoredAmbient amb_probe = euclid_gradient(pd, g, *trial, obj);
        const TangentVector grad_probe = project_tangent(*trial, amb_probe, g);
        const double dphi = inner(grad_probe, transport(*trial, dir, g), g);
        double astar = alpha0;
        if (dphi > g0)  // quadratic interpolant of the slope at 0 and alpha0
          astar = std::clamp(alpha0 * g0 / (g0 - dphi), 1e-3 * alpha0, 4.0 * alpha0);
        ar.evaluations = 1;
        if (std::abs(astar - alpha0) > 1e-3 * alpha0) {
          trial = retract(*cur, astar * dir, g);
          ar.evaluations = 2;
        }
        ar.alpha = astar;
        ar.f_new = eval_functional(pd, g, *trial, obj);
        break;
      }
      try {
        ar = armijo_linesearch(f_along, f, g0, alpha0, cfg);
        break;
      } catch (const LineSearchStalled& e) {
        if (!dir_is_steepest) {  // retry once along the gradient itself
          dir = -1.0 * grad;
          dir_is_steepest = true;
          g0 = -gn * gn;
          continue;
        }
        throw LineSearchStalled(
            std::string(e.what()) + " at iteration " + std::to_string(it + 1),
            SolveResult{*cur, out.record, false});
      }
    }

    auto next = std::make_unique<FixedRankPoint>(std::move(*trial));
    FactoredAmbient amb_new = euclid_gradient(pd, g, *next, obj);
    TangentVector grad_new = project_tangent(*next, amb_new, g);
    const double gn_new = norm(grad_new, g);
    // Powell restart: the truncating retraction and projection transport do
    // not preserve the orthogonality of successive gradients that the
    // Fletcher-Reeves update relies on; when it is lost the momentum term
    // goes stale and the iteration jams into a fixed slow direction. Reset
    // to steepest descent whenever the correlation is substantial.
    double beta = fletcher_reeves_beta(gn_new, gn);
    if (std::abs(inner(grad_new, transport(*next, grad, g), g)) >= 0.1 * gn_new * gn_new)
      beta = 0.0;
    TangentVector dir_new = -1.0 * grad_new + beta * transport(*next, dir, g);
    dir_is_steepest = beta == 0.0;

    RLRA_REQUIRE(ar.f_new <=
                     f + 100.0 * std::numeric_limits<double>::epsilon() *
                             std::max(1.0, std::abs(f)),
                 "line search must not increase the functional");
    cur = std::move(next);
    amb = std::move(amb_new);
    grad = std::move(grad_new);
    dir = std::move(dir_new);
    gn = gn_new;
    f = ar.f_new;
    ++it;
    log_row(it, ar.alpha, ar.evaluations, gn <= cfg.tol || it >= cfg.max_iters);
  }

  out.x = *cur;
  out.converged = gn <= cfg.tol;
  return out;
}

}  // namespace rlra
