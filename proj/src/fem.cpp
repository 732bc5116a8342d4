#include "rlra/fem.hpp"

#include <cmath>
#include <vector>

#include "rlra/weighted_svd.hpp"

namespace rlra {

namespace {

constexpr double kPi = 3.14159265358979323846;

// One triangle of the mesh: global grid coordinates of the three vertices
// (0..N+1 per axis; interior iff 1..N).
struct Triangle {
  Index gx[3];
  Index gy[3];
};

// Visits the two triangles of every cell.
template <typename Visit>
void for_each_triangle(const StructuredGrid& grid, Visit&& visit) {
  const Index cells = grid.n_side + 1;
  for (Index cy = 0; cy < cells; ++cy)
    for (Index cx = 0; cx < cells; ++cx) {
      visit(Triangle{{cx, cx + 1, cx + 1}, {cy, cy, cy + 1}});  // below the diagonal
      visit(Triangle{{cx, cx + 1, cx}, {cy, cy + 1, cy + 1}});  // above the diagonal
    }
}

Index interior_index(const StructuredGrid& grid, Index gx, Index gy) {
  if (gx < 1 || gx > grid.n_side || gy < 1 || gy > grid.n_side) return -1;
  return grid.node_index(gx - 1, gy - 1);
}

}  // namespace

double KlMode::eval(double x1, double x2) const {
  return amplitude * std::sin(kPi * static_cast<double>(k) * x1) *
         std::sin(kPi * static_cast<double>(l) * x2);
}

KlMode kl_mode(Index j) {
  RLRA_REQUIRE(j >= 1, "mode index is 1-based");
  // Pairs (k, l) with k, l >= 1 ordered by k+l, then by k.
  Index remaining = j;
  for (Index sum = 2;; ++sum) {
    const Index pairs = sum - 1;
    if (remaining <= pairs) {
      const Index k = remaining;
      const Index l = sum - k;
      return KlMode{j, k, l, 1.0 / static_cast<double>(k * k + l * l)};
    }
    remaining -= pairs;
  }
}

double forcing_value(double x1, double x2, double s1, double s2) {
  const double d1 = x1 - s1;
  const double d2 = x2 - s2;
  return 100.0 * std::exp(-0.5 * (d1 * d1 + d2 * d2)) * std::cos(2.0 * kPi * x1) *
         std::sin(2.0 * kPi * x2);
}

SparseSymMatrix assemble_stiffness(const StructuredGrid& grid, const SpatialFn& coeff) {
  const double h = grid.spacing();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(grid.node_count()) * 7);
  for_each_triangle(grid, [&](const Triangle& t) {
    double x[3], y[3];
    for (int v = 0; v < 3; ++v) {
      x[v] = static_cast<double>(t.gx[v]) * h;
      y[v] = static_cast<double>(t.gy[v]) * h;
    }
    const double s2 = (x[1] - x[0]) * (y[2] - y[0]) - (x[2] - x[0]) * (y[1] - y[0]);
    const double area = 0.5 * std::abs(s2);
    // P1 gradients: grad phi_v = ((y_{v+1} - y_{v+2}), (x_{v+2} - x_{v+1})) / s2.
    double gxv[3], gyv[3];
    for (int v = 0; v < 3; ++v) {
      const int a = (v + 1) % 3, b = (v + 2) % 3;
      gxv[v] = (y[a] - y[b]) / s2;
      gyv[v] = (x[b] - x[a]) / s2;
    }
    const double c = coeff((x[0] + x[1] + x[2]) / 3.0, (y[0] + y[1] + y[2]) / 3.0);
    Index idx[3];
    for (int v = 0; v < 3; ++v) idx[v] = interior_index(grid, t.gx[v], t.gy[v]);
    for (int a = 0; a < 3; ++a) {
      if (idx[a] < 0) continue;
      for (int b = a; b < 3; ++b) {
        if (idx[b] < 0) continue;
        const double val = c * area * (gxv[a] * gxv[b] + gyv[a] * gyv[b]);
        if (val != 0.0) trip.emplace_back(idx[a], idx[b], val);
      }
    }
  });
  return make_sparse_sym(grid.node_count(), trip);
}

Vector assemble_load_column(const StructuredGrid& grid, const SpatialFn& f) {
  const double h = grid.spacing();
  Vector load = Vector::Zero(grid.node_count());
  for_each_triangle(grid, [&](const Triangle& t) {
    double x[3], y[3];
    for (int v = 0; v < 3; ++v) {
      x[v] = static_cast<double>(t.gx[v]) * h;
      y[v] = static_cast<double>(t.gy[v]) * h;
    }
    const double area = 0.5 * h * h;
    // Edge midpoints (v, v+1); phi_v is 1/2 on the two edges touching v.
    double fm[3];
    for (int e = 0; e < 3; ++e) {
      const int a = e, b = (e + 1) % 3;
      fm[e] = f(0.5 * (x[a] + x[b]), 0.5 * (y[a] + y[b]));
    }
    for (int v = 0; v < 3; ++v) {
      const Index idx = interior_index(grid, t.gx[v], t.gy[v]);
      if (idx < 0) continue;
      const int e_prev = (v + 2) % 3;  // edge (v-1, v)
      load(idx) += area / 3.0 * 0.5 * (fm[v] + fm[e_prev]);
    }
  });
  return load;
}

Vector mass_lump(const StructuredGrid& grid) {
  const double h = grid.spacing();
  Vector w = Vector::Zero(grid.node_count());
  for_each_triangle(grid, [&](const Triangle& t) {
    const double area = 0.5 * h * h;
    for (int v = 0; v < 3; ++v) {
      const Index idx = interior_index(grid, t.gx[v], t.gy[v]);
      if (idx >= 0) w(idx) += area / 3.0;  // integral of phi_v over this triangle
    }
  });
  return w;
}

FactoredAmbient assemble_rhs_with(const StructuredGrid& grid, const SampleSet& samples,
                                  const ParametricForcing& f, double compression_tol,
                                  const Metric* metric) {
  validate_samples(samples);
  RLRA_REQUIRE(compression_tol > 0.0, "compression tolerance must be positive");
  const Index m = grid.node_count();
  const Index n = samples.n();

  Metric own = Metric::frobenius(0, 0);
  if (metric == nullptr) {
    own = Metric::preconditioned(
        spd_factorize(assemble_stiffness(grid, [](double, double) { return 1.0; })),
        samples.weights);
    metric = &own;
  }
  RLRA_REQUIRE(metric->rows() == m && metric->cols() == n,
               "metric does not match grid/sample dimensions");

  const Index cap = std::min<Index>(std::min(m, n), 200);
  const Index block = 64;
  // Each block merge truncates once and the errors accumulate, so the
  // per-merge cut is tightened by the merge count (plus safety margin) to
  // keep the total within compression_tol.
  const Index merges = (n + block - 1) / block;
  const TruncationTarget target{cap, compression_tol / (8.0 * static_cast<double>(merges))};

  // Running compressed factorization of the first j columns; the right factor
  // keeps n rows (zeros on unprocessed samples) so partial P-norms are exact.
  Matrix left(m, 0), right(n, 0);
  for (Index j0 = 0; j0 < n; j0 += block) {
    const Index b = std::min(block, n - j0);
    Matrix cols(m, b);
    for (Index t = 0; t < b; ++t) {
      const Vector xi = samples.samples.col(j0 + t);
      cols.col(t) =
          assemble_load_column(grid, [&](double x1, double x2) { return f(x1, x2, xi); });
    }
    Matrix l2(m, left.cols() + b), r2(n, left.cols() + b);
    l2 << left, cols;
    r2.leftCols(right.cols()) = right;
    r2.rightCols(b).setZero();
    for (Index t = 0; t < b; ++t) r2(j0 + t, right.cols() + t) = 1.0;
    FixedRankPoint merged =
        weighted_truncated_svd(FactoredAmbient(std::move(l2), std::move(r2)), *metric, target);
    left = merged.phi();
    right = merged.V;
  }
  return FactoredAmbient(std::move(left), std::move(right));
}

FactoredAmbient assemble_rhs(const StructuredGrid& grid, const SampleSet& samples,
                             double compression_tol, const Metric* metric) {
  if (samples.p() < 2)
    throw Error("the forcing term reads the first two parameter components; need p >= 2");
  return assemble_rhs_with(
      grid, samples,
      [](double x1, double x2, const Vector& xi) {
        return forcing_value(x1, x2, xi(0), xi(1));
      },
      compression_tol, metric);
}

ProblemData build_fem_problem(Index n_side, Index n_samples, Index p, std::uint64_t seed,
                              FemVariant variant, double rhs_tol) {
  if (p < 2)
    throw Error("the forcing term reads the first two parameter components; need p >= 2");
  StructuredGrid grid(n_side);
  ProblemData pd;
  pd.samples = sample_parameters(n_samples, p, seed);
  pd.xi = build_xi_matrices(pd.samples);
  pd.op.terms.reserve(p + 1);
  pd.op.terms.push_back(assemble_stiffness(grid, [](double, double) { return 1.0; }));
  for (Index i = 1; i <= p; ++i) {
    const KlMode mode = kl_mode(i);
    pd.op.terms.push_back(assemble_stiffness(
        grid, [&mode](double x1, double x2) { return mode.eval(x1, x2); }));
  }
  pd.k = pd.op.terms[0];
  pd.kfac = spd_factorize(pd.k);
  Metric g = Metric::preconditioned(pd.kfac, pd.xi.diag[0]);
  pd.b = assemble_rhs(grid, pd.samples, rhs_tol, &g);
  if (variant == FemVariant::CubicReaction)
    pd.nonlinearity = NonlinearitySpec::lumped_quartic(mass_lump(grid));
  validate_problem(pd);
  return pd;
}

}  // namespace rlra
