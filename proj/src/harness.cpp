#include "rlra/harness.hpp"

#include <json.hpp>

#include <Eigen/Core>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "rlra/geometry.hpp"
#include "rlra/io.hpp"
#include "rlra/rng.hpp"

namespace rlra {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

void check_keys(const json& obj, const std::string& block,
                std::initializer_list<const char*> allowed) {
  RLRA_REQUIRE(obj.is_object(), "config block '" + block + "' must be a JSON object");
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* key : allowed)
      if (item.key() == key) {
        known = true;
        break;
      }
    if (!known) throw Error("unknown key '" + item.key() + "' in config block '" + block + "'");
  }
}

double as_number(const json& v, const std::string& where) {
  if (!v.is_number()) throw Error("config field '" + where + "' must be a number");
  return v.get<double>();
}

Index as_index(const json& v, const std::string& where) {
  if (!v.is_number_integer()) throw Error("config field '" + where + "' must be an integer");
  return v.get<Index>();
}

bool as_bool(const json& v, const std::string& where) {
  if (!v.is_boolean()) throw Error("config field '" + where + "' must be a boolean");
  return v.get<bool>();
}

std::string as_string(const json& v, const std::string& where) {
  if (!v.is_string()) throw Error("config field '" + where + "' must be a string");
  return v.get<std::string>();
}

void parse_problem(const json& j, ProblemBlock& pb) {
  check_keys(j, "problem",
             {"N", "p", "n", "seed", "nonlinear", "compression", "rhs_tol"});
  if (j.contains("N")) pb.grid_n = as_index(j["N"], "problem.N");
  if (j.contains("p")) pb.p = as_index(j["p"], "problem.p");
  if (j.contains("n")) pb.n = as_index(j["n"], "problem.n");
  if (j.contains("seed")) {
    const json& v = j["seed"];
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
      throw Error("config field 'problem.seed' must be a nonnegative integer");
    pb.seed = v.get<std::uint64_t>();
  }
  if (j.contains("nonlinear")) pb.nonlinear = as_bool(j["nonlinear"], "problem.nonlinear");
  if (j.contains("compression")) {
    const json& v = j["compression"];
    if (v.is_string()) {
      if (v.get<std::string>() != "half")
        throw Error("config field 'problem.compression' must be an integer or \"half\"");
      pb.compression_half = true;
    } else {
      pb.compression = as_index(v, "problem.compression");
      if (pb.compression < 0) throw Error("config field 'problem.compression' must be >= 0");
    }
  }
  if (j.contains("rhs_tol")) pb.rhs_tol = as_number(j["rhs_tol"], "problem.rhs_tol");

  if (pb.grid_n < 1) throw Error("config field 'problem.N' must be >= 1");
  if (pb.p < 2)
    throw Error("config error: problem.p = " + std::to_string(pb.p) +
                ", but the parametric forcing reads xi_1 and xi_2, so p must be >= 2");
  if (pb.n < 1) throw Error("config field 'problem.n' must be >= 1");
  if (!(pb.rhs_tol > 0.0)) throw Error("config field 'problem.rhs_tol' must be positive");
  if ((pb.compression > 0 || pb.compression_half) && !pb.nonlinear)
    throw Error("config error: problem.compression applies to the cubic nonlinearity; "
                "set problem.nonlinear = true");
}

void parse_rcg(const json& j, RcgConfig& c) {
  check_keys(j, "solver.rcg", {"tol", "max_iters", "armijo_c", "backtrack", "max_backtracks"});
  if (j.contains("tol")) c.tol = as_number(j["tol"], "solver.rcg.tol");
  if (j.contains("max_iters")) c.max_iters = as_index(j["max_iters"], "solver.rcg.max_iters");
  if (j.contains("armijo_c")) c.armijo_c = as_number(j["armijo_c"], "solver.rcg.armijo_c");
  if (j.contains("backtrack")) c.backtrack = as_number(j["backtrack"], "solver.rcg.backtrack");
  if (j.contains("max_backtracks"))
    c.max_backtracks = as_index(j["max_backtracks"], "solver.rcg.max_backtracks");
}

void parse_rtr(const json& j, RtrConfig& c) {
  check_keys(j, "solver.rtr",
             {"tol", "max_iters", "delta1", "delta_max", "accept_rho", "expand_rho",
              "shrink_rho", "tcg_kappa", "tcg_theta", "max_inner", "rcg_warmup",
              "warmup_grad_tol"});
  if (j.contains("tol")) c.tol = as_number(j["tol"], "solver.rtr.tol");
  if (j.contains("max_iters")) c.max_iters = as_index(j["max_iters"], "solver.rtr.max_iters");
  if (j.contains("delta1")) c.delta1 = as_number(j["delta1"], "solver.rtr.delta1");
  if (j.contains("delta_max")) c.delta_max = as_number(j["delta_max"], "solver.rtr.delta_max");
  if (j.contains("accept_rho")) c.accept_rho = as_number(j["accept_rho"], "solver.rtr.accept_rho");
  if (j.contains("expand_rho")) c.expand_rho = as_number(j["expand_rho"], "solver.rtr.expand_rho");
  if (j.contains("shrink_rho")) c.shrink_rho = as_number(j["shrink_rho"], "solver.rtr.shrink_rho");
  if (j.contains("tcg_kappa")) c.tcg_kappa = as_number(j["tcg_kappa"], "solver.rtr.tcg_kappa");
  if (j.contains("tcg_theta")) c.tcg_theta = as_number(j["tcg_theta"], "solver.rtr.tcg_theta");
  if (j.contains("max_inner")) c.max_inner = as_index(j["max_inner"], "solver.rtr.max_inner");
  if (j.contains("rcg_warmup")) c.rcg_warmup = as_bool(j["rcg_warmup"], "solver.rtr.rcg_warmup");
  if (j.contains("warmup_grad_tol"))
    c.warmup_grad_tol = as_number(j["warmup_grad_tol"], "solver.rtr.warmup_grad_tol");
}

void parse_rank_adaptive(const json& j, RankAdaptiveConfig& c) {
  check_keys(j, "solver.rank_adaptive",
             {"initial_rank", "rank_increase", "epsilon", "max_phases", "inner"});
  if (j.contains("initial_rank"))
    c.initial_rank = as_index(j["initial_rank"], "solver.rank_adaptive.initial_rank");
  if (j.contains("rank_increase"))
    c.rank_increase = as_index(j["rank_increase"], "solver.rank_adaptive.rank_increase");
  if (j.contains("epsilon")) c.epsilon = as_number(j["epsilon"], "solver.rank_adaptive.epsilon");
  if (j.contains("max_phases"))
    c.max_phases = as_index(j["max_phases"], "solver.rank_adaptive.max_phases");
  if (j.contains("inner")) {
    const std::string v = as_string(j["inner"], "solver.rank_adaptive.inner");
    if (v == "rcg")
      c.inner = RankAdaptiveConfig::Inner::Rcg;
    else if (v == "rtr")
      c.inner = RankAdaptiveConfig::Inner::Rtr;
    else
      throw Error("config field 'solver.rank_adaptive.inner' must be \"rcg\" or \"rtr\"");
  }
}

void parse_solver(const json& j, SolverBlock& sb) {
  check_keys(j, "solver",
             {"method", "rank", "ranks", "x0_seed", "oracle_error", "tol", "max_iters", "rcg",
              "rtr", "rank_adaptive"});
  if (j.contains("method")) {
    const std::string v = as_string(j["method"], "solver.method");
    if (v == "rcg")
      sb.method = SolverBlock::Method::Rcg;
    else if (v == "rtr")
      sb.method = SolverBlock::Method::Rtr;
    else if (v == "rank-adaptive")
      sb.method = SolverBlock::Method::RankAdaptive;
    else
      throw Error("config field 'solver.method' must be \"rcg\", \"rtr\", or \"rank-adaptive\"");
  }
  if (j.contains("rank")) sb.rank = as_index(j["rank"], "solver.rank");
  if (j.contains("ranks")) {
    const json& v = j["ranks"];
    if (!v.is_array() || v.empty())
      throw Error("config field 'solver.ranks' must be a nonempty array of integers");
    sb.ranks.clear();
    for (const json& e : v) {
      const Index r = as_index(e, "solver.ranks[]");
      if (r < 1) throw Error("config field 'solver.ranks' entries must be >= 1");
      sb.ranks.push_back(r);
    }
  }
  if (j.contains("x0_seed")) {
    const json& v = j["x0_seed"];
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
      throw Error("config field 'solver.x0_seed' must be a nonnegative integer");
    sb.x0_seed = v.get<std::uint64_t>();
  }
  if (j.contains("oracle_error"))
    sb.oracle_error = as_bool(j["oracle_error"], "solver.oracle_error");

  // Top-level tol / max_iters seed every method config; sub-blocks refine.
  if (j.contains("tol")) {
    const double tol = as_number(j["tol"], "solver.tol");
    if (!(tol > 0.0)) throw Error("config field 'solver.tol' must be positive");
    sb.rcg.tol = sb.rtr.tol = sb.rank_adaptive.tol = tol;
    sb.rank_adaptive.rcg.tol = sb.rank_adaptive.rtr.tol = tol;
  }
  if (j.contains("max_iters")) {
    const Index mi = as_index(j["max_iters"], "solver.max_iters");
    if (mi < 1) throw Error("config field 'solver.max_iters' must be >= 1");
    sb.rcg.max_iters = sb.rtr.max_iters = mi;
    sb.rank_adaptive.rcg.max_iters = sb.rank_adaptive.rtr.max_iters = mi;
  }
  if (j.contains("rcg")) {
    parse_rcg(j["rcg"], sb.rcg);
    parse_rcg(j["rcg"], sb.rank_adaptive.rcg);
  }
  if (j.contains("rtr")) {
    parse_rtr(j["rtr"], sb.rtr);
    parse_rtr(j["rtr"], sb.rank_adaptive.rtr);
  }
  if (j.contains("rank_adaptive")) parse_rank_adaptive(j["rank_adaptive"], sb.rank_adaptive);

  if (sb.rank < 1) throw Error("config field 'solver.rank' must be >= 1");
}

void parse_metric(const json& j, MetricBlock& mb) {
  check_keys(j, "metric", {"kind"});
  if (j.contains("kind")) {
    const std::string v = as_string(j["kind"], "metric.kind");
    if (v == "preconditioned")
      mb.kind = MetricBlock::Kind::Preconditioned;
    else if (v == "frobenius")
      mb.kind = MetricBlock::Kind::Frobenius;
    else if (v == "unpreconditioned")
      mb.kind = MetricBlock::Kind::Unpreconditioned;
    else
      throw Error("config field 'metric.kind' must be \"preconditioned\", \"frobenius\", or "
                  "\"unpreconditioned\"");
  }
}

void parse_output(const json& j, OutputBlock& ob) {
  check_keys(j, "output", {"dir"});
  if (j.contains("dir")) ob.dir = as_string(j["dir"], "output.dir");
  if (ob.dir.empty()) throw Error("config field 'output.dir' must be nonempty");
}

std::string metric_name(MetricBlock::Kind k) {
  switch (k) {
    case MetricBlock::Kind::Preconditioned: return "preconditioned";
    case MetricBlock::Kind::Frobenius: return "frobenius";
    case MetricBlock::Kind::Unpreconditioned: return "unpreconditioned";
  }
  return "?";
}

std::string method_name(SolverBlock::Method m) {
  switch (m) {
    case SolverBlock::Method::Rcg: return "rcg";
    case SolverBlock::Method::Rtr: return "rtr";
    case SolverBlock::Method::RankAdaptive: return "rank-adaptive";
  }
  return "?";
}

fs::path ensure_out_dir(const ExperimentConfig& cfg) {
  fs::path dir(cfg.output.dir);
  fs::create_directories(dir);
  return dir;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  RLRA_REQUIRE(out.good(), "cannot open '" + path.string() + "' for writing");
  out << j.dump(2) << "\n";
  RLRA_REQUIRE(out.good(), "write to '" + path.string() + "' failed");
}

json config_echo(const ExperimentConfig& cfg) {
  json j;
  j["problem"] = {{"N", cfg.problem.grid_n},
                  {"p", cfg.problem.p},
                  {"n", cfg.problem.n},
                  {"seed", cfg.problem.seed},
                  {"nonlinear", cfg.problem.nonlinear}};
  if (cfg.problem.compression_half)
    j["problem"]["compression"] = "half";
  else
    j["problem"]["compression"] = cfg.problem.compression;
  j["solver"] = {{"method", method_name(cfg.solver.method)}, {"x0_seed", start_seed(cfg)}};
  j["metric"] = metric_name(cfg.metric.kind);
  return j;
}

double last_residual(const ConvergenceRecord& rec) {
  for (auto it = rec.stats.rbegin(); it != rec.stats.rend(); ++it)
    if (!std::isnan(it->residual)) return it->residual;
  return std::numeric_limits<double>::quiet_NaN();
}

json nan_safe(double v) {
  // JSON has no NaN literal; absent values are encoded as null.
  if (std::isnan(v)) return nullptr;
  return v;
}

struct OracleRun {
  SnapshotMatrix snap;
  double seconds = 0.0;
  double mean_iterations = 0.0;
  std::vector<Index> failed_columns;
};

OracleRun run_oracle(const ProblemData& pd) {
  OracleRun out;
  const auto t0 = std::chrono::steady_clock::now();
  out.snap = pd.nonlinearity.active() ? solve_snapshot_newton(pd) : solve_snapshot_linear(pd);
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  double total = 0.0;
  for (Index j = 0; j < out.snap.cols(); ++j) {
    total += static_cast<double>(out.snap.columns[static_cast<std::size_t>(j)].iterations);
    if (out.snap.columns[static_cast<std::size_t>(j)].failed) out.failed_columns.push_back(j);
  }
  out.mean_iterations = total / static_cast<double>(out.snap.cols());
  return out;
}

void report_oracle_failures(const OracleRun& oracle) {
  for (Index j : oracle.failed_columns) {
    const ColumnStat& st = oracle.snap.columns[static_cast<std::size_t>(j)];
    std::cerr << "warning: oracle column " << j << " failed to converge (iterations "
              << st.iterations << ", residual " << st.residual << ")\n";
  }
}

json oracle_json(const OracleRun& oracle) {
  json j;
  j["mean_iterations"] = oracle.mean_iterations;
  j["failed_columns"] = oracle.failed_columns;
  j["seconds"] = oracle.seconds;
  return j;
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(std::string("config parse error: ") + e.what());
  }
  check_keys(root, "top level", {"problem", "solver", "metric", "output"});
  ExperimentConfig cfg;
  if (root.contains("problem")) parse_problem(root["problem"], cfg.problem);
  if (root.contains("solver")) parse_solver(root["solver"], cfg.solver);
  if (root.contains("metric")) parse_metric(root["metric"], cfg.metric);
  if (root.contains("output")) parse_output(root["output"], cfg.output);
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in.good()) throw Error("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_experiment_config(ss.str());
}

void apply_overrides(ExperimentConfig& cfg, const CliOverrides& o) {
  if (o.seed) cfg.problem.seed = *o.seed;
  if (o.out_dir) cfg.output.dir = *o.out_dir;
  if (o.threads >= 1) Eigen::setNbThreads(o.threads);
  if (!o.full_scale && (cfg.problem.grid_n > 63 || cfg.problem.n > 1024))
    throw Error("config requests N=" + std::to_string(cfg.problem.grid_n) + ", n=" +
                std::to_string(cfg.problem.n) +
                " beyond desk scale (N <= 63, n <= 1024); pass --full-scale to run it");
}

ProblemData build_problem(const ProblemBlock& pb) {
  return build_fem_problem(pb.grid_n, pb.n, pb.p, pb.seed,
                           pb.nonlinear ? FemVariant::CubicReaction : FemVariant::Linear,
                           pb.rhs_tol);
}

Metric make_metric(const ExperimentConfig& cfg, const ProblemData& pd) {
  switch (cfg.metric.kind) {
    case MetricBlock::Kind::Preconditioned: return pd.metric();
    case MetricBlock::Kind::Frobenius: return Metric::frobenius(pd.rows(), pd.cols());
    case MetricBlock::Kind::Unpreconditioned:
      return Metric::unpreconditioned(pd.rows(), pd.xi.diag.at(0));
  }
  throw Error("unreachable metric kind");
}

ObjectiveConfig make_objective(const ExperimentConfig& cfg) {
  if (!cfg.problem.nonlinear) return ObjectiveConfig::exact();
  if (cfg.problem.compression_half) return ObjectiveConfig::compressed();
  if (cfg.problem.compression > 0) return ObjectiveConfig::compressed(cfg.problem.compression);
  return ObjectiveConfig::exact();
}

std::uint64_t start_seed(const ExperimentConfig& cfg) {
  return cfg.solver.x0_seed ? *cfg.solver.x0_seed : cfg.problem.seed + 1;
}

int cmd_assemble(const ExperimentConfig& cfg) {
  const fs::path dir = ensure_out_dir(cfg);
  const ProblemData pd = build_problem(cfg.problem);
  const fs::path container = dir / "problem.bin";
  write_problem(container.string(), pd);

  json summary;
  summary["command"] = "assemble";
  summary["config"] = config_echo(cfg);
  summary["m"] = pd.rows();
  summary["n"] = pd.cols();
  summary["p"] = pd.op.p();
  summary["nonlinear"] = pd.nonlinearity.active();
  summary["rhs_width"] = pd.b.width();
  summary["problem_path"] = container.string();
  write_json(dir / "assemble.json", summary);

  std::cout << "assembled m=" << pd.rows() << " n=" << pd.cols() << " p=" << pd.op.p()
            << (pd.nonlinearity.active() ? " nonlinear" : " linear") << " -> "
            << container.string() << "\n";
  return 0;
}

int cmd_solve(const ExperimentConfig& cfg) {
  const fs::path dir = ensure_out_dir(cfg);
  const ProblemData pd = build_problem(cfg.problem);
  const Metric g = make_metric(cfg, pd);
  const ObjectiveConfig obj = make_objective(cfg);

  SolveResult result;
  std::string stall_message;
  bool stalled = false;
  try {
    switch (cfg.solver.method) {
      case SolverBlock::Method::Rcg: {
        SplitMix64 rng(start_seed(cfg));
        const FixedRankPoint x0 = random_point(g, cfg.solver.rank, rng);
        result = rcg_solve(pd, g, x0, cfg.solver.rcg, obj);
        break;
      }
      case SolverBlock::Method::Rtr: {
        SplitMix64 rng(start_seed(cfg));
        const FixedRankPoint x0 = random_point(g, cfg.solver.rank, rng);
        result = rtr_solve(pd, g, x0, cfg.solver.rtr, obj);
        break;
      }
      case SolverBlock::Method::RankAdaptive:
        result = rank_adaptive_solve(pd, g, cfg.solver.rank_adaptive, obj, start_seed(cfg));
        break;
    }
  } catch (const SolverStall& e) {
    RLRA_REQUIRE(e.state() != nullptr, "solver stall carries no partial state");
    result = *e.state();
    stall_message = e.what();
    stalled = true;
  }

  write_convergence_csv((dir / "history.csv").string(), result.record);

  json summary;
  summary["command"] = "solve";
  summary["config"] = config_echo(cfg);
  summary["m"] = pd.rows();
  summary["n"] = pd.cols();
  summary["p"] = pd.op.p();
  summary["method"] = method_name(cfg.solver.method);
  summary["metric"] = metric_name(cfg.metric.kind);
  summary["rank"] = result.x.rank();
  summary["converged"] = result.converged;
  if (stalled) summary["stalled"] = stall_message;
  if (!result.record.empty()) {
    const IterationStat& last = result.record.back();
    summary["iterations"] = last.iteration;
    summary["grad_p_norm"] = last.grad_norm;
    summary["residual"] = nan_safe(last_residual(result.record));
    summary["functional"] = last.functional;
    summary["seconds"] = last.seconds;
  }
  if (cfg.solver.oracle_error) {
    const OracleRun oracle = run_oracle(pd);
    report_oracle_failures(oracle);
    summary["error_vs_oracle"] = relative_error(oracle.snap, result.x, g);
    summary["best_rank_error"] = best_rank_error(oracle.snap, result.x.rank(), g);
    summary["oracle"] = oracle_json(oracle);
  }
  write_json(dir / "summary.json", summary);

  std::cout << "solve method=" << method_name(cfg.solver.method) << " rank=" << result.x.rank()
            << " iterations=" << (result.record.empty() ? 0 : result.record.back().iteration)
            << " grad_p_norm="
            << (result.record.empty() ? 0.0 : result.record.back().grad_norm)
            << " converged=" << (result.converged ? 1 : 0) << "\n";
  if (stalled) {
    std::cerr << "error: " << stall_message << " (partial history in "
              << (dir / "history.csv").string() << ")\n";
    return 3;
  }
  return 0;
}

int cmd_compare(const ExperimentConfig& cfg) {
  RLRA_REQUIRE(cfg.solver.method != SolverBlock::Method::RankAdaptive,
               "compare sweeps fixed ranks; solver.method must be rcg or rtr");
  const fs::path dir = ensure_out_dir(cfg);
  const ProblemData pd = build_problem(cfg.problem);
  const Metric g = make_metric(cfg, pd);

  const OracleRun oracle = run_oracle(pd);
  report_oracle_failures(oracle);
  const Vector spectrum = weighted_spectrum(oracle.snap, g);

  std::vector<Index> ranks = cfg.solver.ranks;
  if (ranks.empty()) ranks.push_back(cfg.solver.rank);

  json rows = json::array();
  std::string stall_message;
  bool stalled = false;
  std::ofstream csv(dir / "compare.csv");
  RLRA_REQUIRE(csv.good(), "cannot open compare.csv for writing");
  csv << "rank,iterations,seconds,e_method,e_star\n";
  for (Index r : ranks) {
    ExperimentConfig run_cfg = cfg;
    run_cfg.solver.rank = r;
    const ObjectiveConfig obj = make_objective(run_cfg);
    SplitMix64 rng(start_seed(cfg));
    const FixedRankPoint x0 = random_point(g, r, rng);
    SolveResult result;
    try {
      result = cfg.solver.method == SolverBlock::Method::Rcg
                   ? rcg_solve(pd, g, x0, cfg.solver.rcg, obj)
                   : rtr_solve(pd, g, x0, cfg.solver.rtr, obj);
    } catch (const SolverStall& e) {
      RLRA_REQUIRE(e.state() != nullptr, "solver stall carries no partial state");
      result = *e.state();
      stall_message = "rank " + std::to_string(r) + ": " + e.what();
      stalled = true;
    }
    const Index iterations = result.record.empty() ? 0 : result.record.back().iteration;
    const double seconds = result.record.empty() ? 0.0 : result.record.back().seconds;
    const double e_method = relative_error(oracle.snap, result.x, g);
    const double e_star = best_rank_error(spectrum, r);
    char line[160];
    std::snprintf(line, sizeof line, "%lld,%lld,%.17g,%.17g,%.17g\n",
                  static_cast<long long>(r), static_cast<long long>(iterations), seconds,
                  e_method, e_star);
    csv << line;
    rows.push_back({{"rank", r},
                    {"iterations", iterations},
                    {"seconds", seconds},
                    {"e_method", e_method},
                    {"e_star", e_star},
                    {"converged", result.converged}});
    std::cout << "compare rank=" << r << " iterations=" << iterations
              << " e_method=" << e_method << " e_star=" << e_star << "\n";
    if (stalled) break;
  }
  csv.flush();
  RLRA_REQUIRE(csv.good(), "write to compare.csv failed");

  json summary;
  summary["command"] = "compare";
  summary["config"] = config_echo(cfg);
  summary["method"] = method_name(cfg.solver.method);
  summary["rows"] = rows;
  summary["oracle"] = oracle_json(oracle);
  if (stalled) summary["stalled"] = stall_message;
  write_json(dir / "compare.json", summary);

  if (stalled) {
    std::cerr << "error: solver stalled at " << stall_message << " (partial table in "
              << (dir / "compare.csv").string() << ")\n";
    return 3;
  }
  return 0;
}

int cmd_svdecay(const ExperimentConfig& cfg) {
  const fs::path dir = ensure_out_dir(cfg);
  const ProblemData pd = build_problem(cfg.problem);
  const Metric g = make_metric(cfg, pd);

  const OracleRun oracle = run_oracle(pd);
  report_oracle_failures(oracle);
  const SingularDecay sd = singular_decay(oracle.snap, g);

  std::ofstream csv(dir / "svdecay.csv");
  RLRA_REQUIRE(csv.good(), "cannot open svdecay.csv for writing");
  csv << "index,sigma,ratio\n";
  const double sigma1 = sd.sigma.size() > 0 ? sd.sigma(0) : 0.0;
  for (Index l = 0; l < sd.sigma.size(); ++l) {
    char line[96];
    std::snprintf(line, sizeof line, "%lld,%.17g,%.17g\n", static_cast<long long>(l + 1),
                  sd.sigma(l), sigma1 > 0.0 ? sd.sigma(l) / sigma1 : 0.0);
    csv << line;
  }
  csv.flush();
  RLRA_REQUIRE(csv.good(), "write to svdecay.csv failed");

  json summary;
  summary["command"] = "svdecay";
  summary["config"] = config_echo(cfg);
  summary["m"] = pd.rows();
  summary["n"] = pd.cols();
  if (std::isinf(sd.exponent))
    summary["exponent"] = "infinite";
  else
    summary["exponent"] = sd.exponent;
  if (sd.sigma.size() >= 32 && sigma1 > 0.0) summary["ratio_32"] = sd.sigma(31) / sigma1;
  summary["oracle"] = oracle_json(oracle);
  write_json(dir / "svdecay.json", summary);

  std::cout << "svdecay m=" << pd.rows() << " n=" << pd.cols() << " exponent=" << sd.exponent
            << "\n";
  return 0;
}

}  // namespace rlra
