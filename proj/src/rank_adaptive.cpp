#include <algorithm>
#include <string>
#include <utility>

#include "rlra/solvers.hpp"
#include "solver_detail.hpp"

namespace rlra {

namespace {

// Smallest rank whose discarded sigma^2 tail mass stays below eps * total;
// called only after sigma_r^2 itself fell below that threshold.
Index reduced_rank(const Vector& sigma, double eps) {
  const Index r = sigma.size();
  const double total = sigma.squaredNorm();
  if (total == 0.0) return 1;
  if (sigma(r - 1) * sigma(r - 1) >= eps * total) return r;
  double tail = total;
  for (Index k = 1; k <= r; ++k) {
    tail -= sigma(k - 1) * sigma(k - 1);
    if (tail < eps * total) return k;
  }
  return r;
}

FixedRankPoint truncate_point(const FixedRankPoint& x, Index k) {
  FixedRankPoint out;
  out.U = x.U.leftCols(k);
  out.sigma = x.sigma.head(k);
  out.V = x.V.leftCols(k);
  return out;
}

}  // namespace

NormalCorrection normal_correction(const ProblemData& pd, const Metric& g,
                                   const FixedRankPoint& x, Index r_up,
                                   const ObjectiveConfig& obj) {
  RLRA_REQUIRE(r_up >= 1, "rank increase must be at least 1");
  const FactoredAmbient amb = euclid_gradient(pd, g, x, obj);
  const FactoredAmbient nrm = project_normal(x, amb.scaled(-1.0), g);

  NormalCorrection out;
  auto zero_result = [&] {
    out.y = FactoredAmbient(Matrix::Zero(x.rows(), 1), Matrix::Zero(x.cols(), 1));
    out.alpha = 0.0;
    out.zero = true;
    return out;
  };
  const double nn = p_norm(nrm, g);
  // The factored P-norm is evaluated through Gram products, whose cancellation
  // noise floors the measurable relative norm near sqrt(machine eps).
  if (nn <= 1e-7 * std::max(p_norm(amb, g), 1e-300)) return zero_result();
  const FixedRankPoint yt = weighted_truncated_svd(nrm, g, TruncationTarget::by_rank(r_up));
  if (yt.rank() == 0) return zero_result();

  out.y = yt.factored();
  const double den = ensemble_quadratic_form(pd, out.y);
  RLRA_REQUIRE(den > 0.0, "ensemble quadratic form must be positive on a nonzero correction");
  out.alpha = yt.sigma.squaredNorm() / den;
  return out;
}

SolveResult rank_adaptive_solve(const ProblemData& pd, const Metric& g,
                                const FixedRankPoint& x0, const RankAdaptiveConfig& cfg,
                                const ObjectiveConfig& obj) {
  RLRA_REQUIRE(cfg.rank_increase >= 1, "rank increase must be at least 1");
  RLRA_REQUIRE(cfg.tol > 0.0, "residual tolerance must be positive");
  RLRA_REQUIRE(cfg.epsilon > 0.0, "rank-reduction threshold must be positive");
  detail::Stopwatch clock;
  const Index max_rank = std::min(pd.rows(), pd.cols());

  SolveResult out;
  auto cur = std::make_unique<FixedRankPoint>(x0);
  Index offset = 0;
  for (Index phase = 0; phase < cfg.max_phases; ++phase) {
    const double phase_t0 = clock.seconds();
    SolveResult inner;
    try {
      inner = cfg.inner == RankAdaptiveConfig::Inner::Rcg
                  ? rcg_solve(pd, g, *cur, cfg.rcg, obj)
                  : rtr_solve(pd, g, *cur, cfg.rtr, obj);
    } catch (const SolverStall& e) {
      // A stalled fixed-rank solve at too small a rank is expected; continue
      // from where it stopped and let the rank grow.
      if (e.state() == nullptr) throw;
      inner = *e.state();
    }
    *cur = inner.x;
    for (const IterationStat& row : inner.record.stats) {
      IterationStat st = row;
      st.iteration += offset;
      st.seconds += phase_t0;
      out.record.append(st);
    }
    offset = out.record.back().iteration + 1;

    // Drop directions carrying only epsilon-level sigma^2 mass.
    const Index keep = reduced_rank(cur->sigma, cfg.epsilon);
    const bool reduced = keep < cur->rank();
    if (reduced) *cur = truncate_point(*cur, keep);

    // Phase-boundary residual: the P-norm of the full ambient gradient.
    FactoredAmbient amb = euclid_gradient(pd, g, *cur, obj);
    const double residual = p_norm(amb, g);
    if (reduced) {
      IterationStat st;
      st.iteration = offset++;
      st.grad_norm = norm(project_tangent(*cur, amb, g), g);
      st.residual = residual;
      st.functional = eval_functional(pd, g, *cur, obj);
      st.rank = cur->rank();
      st.step = 0.0;
      st.inner_iters = 0;
      st.seconds = clock.seconds();
      out.record.append(st);
    } else {
      out.record.stats.back().residual = residual;
    }

    if (residual <= cfg.tol) {
      out.converged = true;
      break;
    }
    if (cur->rank() >= max_rank)
      throw RankExhausted("residual " + std::to_string(residual) +
                              " still above tolerance at the full rank " +
                              std::to_string(max_rank),
                          SolveResult{*cur, out.record, false});

    const Index r_new = std::min(cur->rank() + cfg.rank_increase, max_rank);
    const NormalCorrection nc = normal_correction(pd, g, *cur, r_new - cur->rank(), obj);
    if (!nc.zero) {
      const FactoredAmbient xf = cur->factored();
      const FactoredAmbient step = nc.y.scaled(nc.alpha);
      *cur = weighted_truncated_svd(FactoredAmbient::sum({&xf, &step}), g,
                                    TruncationTarget::by_rank(r_new));
    }
    // With a fully tangent gradient there is nothing to grow along; rerun at
    // the current rank (the phase cap bounds the loop).
  }

  out.x = *cur;
  return out;
}

SolveResult rank_adaptive_solve(const ProblemData& pd, const Metric& g,
                                const RankAdaptiveConfig& cfg, const ObjectiveConfig& obj,
                                std::uint64_t seed) {
  RLRA_REQUIRE(cfg.initial_rank >= 1 && cfg.initial_rank <= std::min(pd.rows(), pd.cols()),
               "initial rank must lie in [1, min(m, n)]");
  SplitMix64 rng(seed);
  return rank_adaptive_solve(pd, g, random_point(g, cfg.initial_rank, rng), cfg, obj);
}

}  // namespace rlra
