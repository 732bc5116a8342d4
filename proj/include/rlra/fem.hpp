#pragma once

#include <cstdint>
#include <functional>

#include "rlra/problem.hpp"

namespace rlra {

// Uniform P1 triangulation of the unit square: N interior nodes per side,
// h = 1/(N+1), each cell split along the (lower-left, upper-right) diagonal.
// Interior nodes are indexed row-major: node = iy*N + ix at ((ix+1)h, (iy+1)h).
struct StructuredGrid {
  Index n_side;

  explicit StructuredGrid(Index n) : n_side(n) {
    RLRA_REQUIRE(n >= 1, "grid needs at least one interior node per side");
  }
  Index node_count() const { return n_side * n_side; }
  double spacing() const { return 1.0 / static_cast<double>(n_side + 1); }
  Index node_index(Index ix, Index iy) const { return iy * n_side + ix; }
  double node_x1(Index node) const {
    return static_cast<double>(node % n_side + 1) * spacing();
  }
  double node_x2(Index node) const {
    return static_cast<double>(node / n_side + 1) * spacing();
  }
};

// j-th diffusion mode psi_j(x) = (k^2 + l^2)^{-1} sin(pi k x1) sin(pi l x2),
// enumerated by increasing k+l, ties broken by increasing k.
struct KlMode {
  Index j;
  Index k;
  Index l;
  double amplitude;

  double eval(double x1, double x2) const;
};

KlMode kl_mode(Index j);

using SpatialFn = std::function<double(double, double)>;

// Gaussian-modulated forcing 100 exp(-((x1-s1)^2+(x2-s2)^2)/2) cos(2 pi x1)
// sin(2 pi x2); s1, s2 are the first two parameter components.
double forcing_value(double x1, double x2, double s1, double s2);

// P1 stiffness of the coefficient field with homogeneous Dirichlet boundary;
// the coefficient is sampled at triangle barycenters (one-point rule).
SparseSymMatrix assemble_stiffness(const StructuredGrid& grid, const SpatialFn& coeff);

// Load vector of a per-sample forcing, three-point edge-midpoint rule.
Vector assemble_load_column(const StructuredGrid& grid, const SpatialFn& f);

// Lumped mass weights w_i = integral of phi_i (= h^2 on the uniform mesh).
Vector mass_lump(const StructuredGrid& grid);

// Per-sample loads of the paper forcing, assembled in column blocks and
// compressed on the fly to a factored matrix with relative P-norm tolerance
// compression_tol (rank cap min(m, n, 200)). When metric is null, the
// coefficient-one stiffness is assembled and factorized internally.
FactoredAmbient assemble_rhs(const StructuredGrid& grid, const SampleSet& samples,
                             double compression_tol, const Metric* metric = nullptr);

// Same, for an arbitrary forcing f(x1, x2, xi).
using ParametricForcing = std::function<double(double, double, const Vector&)>;
FactoredAmbient assemble_rhs_with(const StructuredGrid& grid, const SampleSet& samples,
                                  const ParametricForcing& f, double compression_tol,
                                  const Metric* metric = nullptr);

enum class FemVariant { Linear, CubicReaction };

// Full test problem: A_0 = stiffness of coefficient 1 (also K), A_i =
// stiffness of psi_i, B the compressed loads, optional mass-lumped cubic
// reaction. Requires p >= 2 (the forcing reads xi_1 and xi_2).
ProblemData build_fem_problem(Index n_side, Index n_samples, Index p, std::uint64_t seed,
                              FemVariant variant, double rhs_tol = 1e-12);

}  // namespace rlra
