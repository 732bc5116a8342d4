#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rlra/fem.hpp"
#include "rlra/objective.hpp"
#include "rlra/oracle.hpp"
#include "rlra/solvers.hpp"

namespace rlra {

// A declarative experiment description parsed from a JSON config file with
// four blocks: problem, solver, metric, output. Unknown keys anywhere are
// rejected so typos fail loudly instead of silently running defaults.
struct ProblemBlock {
  Index grid_n = 15;   // interior grid nodes per side; m = grid_n^2
  Index p = 4;         // parameter dimension (>= 2: the forcing reads xi_1, xi_2)
  Index n = 256;       // number of parameter samples
  std::uint64_t seed = 1;
  bool nonlinear = false;     // cubic reaction term on/off
  Index compression = 0;      // r-tilde for the quartic term; 0 = exact
  bool compression_half = false;  // "half" policy: r-tilde = ceil(rank / 2)
  double rhs_tol = 1e-12;     // low-rank compression tolerance of the rhs assembly
};

struct SolverBlock {
  enum class Method { Rcg, Rtr, RankAdaptive };
  Method method = Method::Rcg;
  Index rank = 8;             // manifold rank for rcg/rtr
  std::vector<Index> ranks;   // compare sweep; defaults to {rank}
  std::optional<std::uint64_t> x0_seed;  // start-point seed; default problem.seed + 1
  bool oracle_error = false;  // solve: also report the error against the snapshot oracle
  RcgConfig rcg;
  RtrConfig rtr;
  RankAdaptiveConfig rank_adaptive;
};

struct MetricBlock {
  enum class Kind { Preconditioned, Frobenius, Unpreconditioned };
  Kind kind = Kind::Preconditioned;
};

struct OutputBlock {
  std::string dir = "out";
};

struct ExperimentConfig {
  ProblemBlock problem;
  SolverBlock solver;
  MetricBlock metric;
  OutputBlock output;
};

// Command-line overrides applied on top of the config file.
struct CliOverrides {
  std::optional<std::uint64_t> seed;  // replaces problem.seed
  std::optional<std::string> out_dir;
  int threads = 1;
  bool full_scale = false;  // unlocks runs beyond desk scale (N > 63 or n > 1024)
};

// Parses and validates a config. Throws Error on malformed JSON, unknown
// keys, or out-of-range values.
ExperimentConfig parse_experiment_config(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::string& path);

// Applies overrides, sets the thread count, and enforces the desk-scale gate.
void apply_overrides(ExperimentConfig& cfg, const CliOverrides& o);

// Derived pieces shared by the commands.
ProblemData build_problem(const ProblemBlock& pb);
Metric make_metric(const ExperimentConfig& cfg, const ProblemData& pd);
ObjectiveConfig make_objective(const ExperimentConfig& cfg);
std::uint64_t start_seed(const ExperimentConfig& cfg);

// Subcommand drivers. Each returns a process exit code: 0 on success,
// 3 when a solver stalled (partial history is still written). Config and
// usage errors are thrown as Error and handled by the caller.
int cmd_assemble(const ExperimentConfig& cfg);
int cmd_solve(const ExperimentConfig& cfg);
int cmd_compare(const ExperimentConfig& cfg);
int cmd_svdecay(const ExperimentConfig& cfg);

}  // namespace rlra
