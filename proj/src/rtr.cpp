#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <utility>

#include "rlra/solvers.hpp"
#include "solver_detail.hpp"

namespace rlra {

namespace {

// Positive root of ||eta + tau d||^2 = delta^2 given the P-inner scalars
// e2 = <eta,eta>, ed = <eta,d>, d2 = <d,d>.
double boundary_root(double e2, double ed, double d2, double delta) {
  RLRA_REQUIRE(d2 > 0.0, "degenerate tcg direction at the boundary");
  const double disc = std::max(0.0, ed * ed + d2 * (delta * delta - e2));
  return (-ed + std::sqrt(disc)) / d2;
}

}  // namespace

TcgResult tcg_subproblem(const TangentVector& grad, const HessianApply& hess, double delta,
                         double kappa, double theta, Index max_inner, const Metric& g) {
  RLRA_REQUIRE(grad.anchor != nullptr, "tcg gradient must be anchored");
  RLRA_REQUIRE(delta > 0.0 && kappa > 0.0 && theta >= 0.0 && max_inner >= 1,
               "invalid tcg parameters");
  const FixedRankPoint& x = *grad.anchor;

  TcgResult out;
  out.eta = TangentVector::zero(x);
  TangentVector heta = TangentVector::zero(x);  // running hess(eta)
  TangentVector r = grad;                       // model gradient at eta
  TangentVector d = -1.0 * r;
  double rr = inner(r, r, g);
  const double r0n = std::sqrt(std::max(rr, 0.0));
  if (r0n == 0.0) return out;
  const double bound = r0n * std::min(kappa, std::pow(r0n, theta));

  auto finish = [&](TcgStop stop) {
    out.stop = stop;
    out.eta_norm = norm(out.eta, g);
    const double md = -(inner(grad, out.eta, g) + 0.5 * inner(heta, out.eta, g));
    RLRA_REQUIRE(md >= -1e-10 * std::max(1.0, r0n * out.eta_norm),
                 "tcg produced a model increase");
    out.model_decrease = std::max(md, 0.0);
    return out;
  };

  double eta_norm = 0.0;
  for (Index j = 1; j <= max_inner; ++j) {
    out.iterations = j;
    TangentVector hd = hess(d);
    const double dh = inner(d, hd, g);
    const double e2 = inner(out.eta, out.eta, g);
    const double ed = inner(out.eta, d, g);
    const double d2 = inner(d, d, g);
    if (dh <= 0.0) {
      const double tau = boundary_root(e2, ed, d2, delta);
      out.eta += tau * d;
      heta += tau * hd;
      return finish(TcgStop::NegativeCurvature);
    }
    const double alpha = rr / dh;
    const double en2 = e2 + 2.0 * alpha * ed + alpha * alpha * d2;
    if (en2 >= delta * delta) {
      const double tau = boundary_root(e2, ed, d2, delta);
      out.eta += tau * d;
      heta += tau * hd;
      return finish(TcgStop::Boundary);
    }
    // Exact-arithmetic Steihaug iterates have nondecreasing norms; a shrink
    // means conjugacy is numerically exhausted, so stop without the step.
    if (en2 < e2) return finish(TcgStop::MaxInner);
    out.eta += alpha * d;
    heta += alpha * hd;
    const double new_norm = std::sqrt(std::max(en2, 0.0));
    RLRA_REQUIRE(new_norm >= eta_norm * (1.0 - 1e-10), "tcg iterate norm decreased");
    eta_norm = new_norm;
    r += alpha * hd;
    const double rr_new = inner(r, r, g);
    if (std::sqrt(std::max(rr_new, 0.0)) <= bound) return finish(TcgStop::Converged);
    const double beta = rr_new / rr;
    rr = rr_new;
    d = -1.0 * r + beta * d;
  }
  return finish(TcgStop::MaxInner);
}

SolveResult rtr_solve(const ProblemData& pd, const Metric& g, const FixedRankPoint& x0,
                      const RtrConfig& cfg, const ObjectiveConfig& obj) {
  RLRA_REQUIRE(cfg.tol > 0.0, "gradient tolerance must be positive");
  RLRA_REQUIRE(cfg.delta1 > 0.0 && cfg.delta1 < cfg.delta_max,
               "initial radius must lie in (0, delta_max)");
  RLRA_REQUIRE(cfg.accept_rho > 0.0 && cfg.accept_rho < cfg.shrink_rho &&
                   cfg.shrink_rho < cfg.expand_rho && cfg.expand_rho < 1.0,
               "rho thresholds must be ordered in (0, 1)");
  detail::Stopwatch clock;

  auto cur = std::make_unique<FixedRankPoint>(x0);
  FactoredAmbient amb;
  TangentVector grad;
  double gn = 0.0;
  auto refresh = [&] {
    amb = euclid_gradient(pd, g, *cur, obj);
    grad = project_tangent(*cur, amb, g);
    gn = norm(grad, g);
  };
  refresh();
  double f = eval_functional(pd, g, *cur, obj);

  SolveResult out;
  auto log_row = [&](Index it, double step, Index inner_iters, bool force_residual) {
    IterationStat st;
    st.iteration = it;
    st.grad_norm = gn;
    st.residual = detail::maybe_residual(amb, g, force_residual);
    st.functional = f;
    st.rank = cur->rank();
    st.step = step;
    st.inner_iters = inner_iters;
    st.seconds = clock.seconds();
    out.record.append(st);
  };
  log_row(0, 0.0, 0, true);

  Index it = 0;
  if (cfg.rcg_warmup && gn > cfg.warmup_grad_tol) {
    RcgConfig wcfg;
    wcfg.tol = std::max(cfg.warmup_grad_tol, cfg.tol);
    wcfg.max_iters = cfg.max_iters;
    const double t0 = clock.seconds();
    SolveResult warm;
    try {
      warm = rcg_solve(pd, g, *cur, wcfg, obj);
    } catch (const LineSearchStalled& e) {
      // A stalled warm-up is not fatal: switch to the trust region from the
      // last iterate it reached.
      if (e.state() == nullptr) throw;
      warm = *e.state();
    }
    *cur = warm.x;
    for (std::size_t i = 1; i < warm.record.stats.size(); ++i) {
      IterationStat st = warm.record.stats[i];
      st.seconds += t0;
      out.record.append(st);
      it = st.iteration;
    }
    refresh();
    f = eval_functional(pd, g, *cur, obj);
  }

  double delta = cfg.delta1;
  while (gn > cfg.tol && it < cfg.max_iters) {
    auto hess = [&](const TangentVector& t) {
      return riemannian_hessian(pd, g, *cur, t, amb, obj);
    };
    const TcgResult sub =
        tcg_subproblem(grad, hess, delta, cfg.tcg_kappa, cfg.tcg_theta, cfg.max_inner, g);
    auto cand = std::make_unique<FixedRankPoint>(retract(*cur, sub.eta, g));
    const double f_new = eval_functional(pd, g, *cand, obj);
    // Regularize rho so that steps whose true decrease drowns in the
    // floating-point resolution of f are still accepted (they are produced
    // from accurate gradients, only their certification is noise-limited).
    const double reg =
        1e3 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(f));
    const double rho = std::isfinite(f_new)
                           ? (f - f_new + reg) / (std::max(sub.model_decrease, 0.0) + reg)
                           : -std::numeric_limits<double>::infinity();
    const bool accept = rho >= cfg.accept_rho;
    const double used_delta = delta;
    const bool at_boundary = sub.stop == TcgStop::NegativeCurvature ||
                             sub.stop == TcgStop::Boundary ||
                             sub.eta_norm >= delta * (1.0 - 1e-10);
    if (rho >= cfg.expand_rho && at_boundary) {
      delta = std::min(2.0 * delta, cfg.delta_max);
    } else if (rho <= cfg.shrink_rho) {
      delta = 0.25 * sub.eta_norm;
    }
    if (accept) {
      RLRA_REQUIRE(f_new <= f + reg, "accepted trust-region step increased the functional");
      cur = std::move(cand);
      f = f_new;
      refresh();
    }
    ++it;
    log_row(it, used_delta, sub.iterations, gn <= cfg.tol || it >= cfg.max_iters);
    if (!accept && delta < 1e-14 * cfg.delta_max) {
      char msg[96];
      std::snprintf(msg, sizeof msg, "trust radius collapsed to %.3e with no acceptable step",
                    delta);
      throw TrustRegionStalled(msg, SolveResult{*cur, out.record, false});
    }
  }

  out.x = *cur;
  out.converged = gn <= cfg.tol;
  return out;
}

}  // namespace rlra
