// Command-line driver: assemble / solve / compare / svdecay over a JSON
// experiment config. See README for the config schema and output formats.

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>

#include "rlra/harness.hpp"

namespace {

struct Args {
  std::string config;
  rlra::CliOverrides overrides;
  std::int64_t seed = -1;
};

void add_common_flags(CLI::App* sub, Args& args) {
  sub->add_option("--config", args.config, "experiment config file (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  sub->add_option("--seed", args.seed, "override problem.seed from the config")
      ->check(CLI::NonNegativeNumber);
  sub->add_option("--threads", args.overrides.threads, "worker threads for dense kernels")
      ->check(CLI::PositiveNumber);
  sub->add_option("--out", args.overrides.out_dir, "override output.dir from the config");
  sub->add_flag("--full-scale", args.overrides.full_scale,
                "allow runs beyond desk scale (N > 63 or n > 1024)");
}

rlra::ExperimentConfig load(const Args& args) {
  rlra::ExperimentConfig cfg = rlra::load_experiment_config(args.config);
  rlra::CliOverrides o = args.overrides;
  if (args.seed >= 0) o.seed = static_cast<std::uint64_t>(args.seed);
  rlra::apply_overrides(cfg, o);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"low-rank ensemble solver for parametrized systems"};
  app.require_subcommand(1);

  Args args;
  CLI::App* assemble =
      app.add_subcommand("assemble", "build a problem and write the binary container");
  CLI::App* solve = app.add_subcommand("solve", "run a solver; write history CSV and summary");
  CLI::App* compare =
      app.add_subcommand("compare", "sweep ranks against the snapshot oracle; write error table");
  CLI::App* svdecay =
      app.add_subcommand("svdecay", "weighted singular spectrum of the snapshot matrix");
  for (CLI::App* sub : {assemble, solve, compare, svdecay}) add_common_flags(sub, args);

  CLI11_PARSE(app, argc, argv);

  try {
    const rlra::ExperimentConfig cfg = load(args);
    if (assemble->parsed()) return rlra::cmd_assemble(cfg);
    if (solve->parsed()) return rlra::cmd_solve(cfg);
    if (compare->parsed()) return rlra::cmd_compare(cfg);
    if (svdecay->parsed()) return rlra::cmd_svdecay(cfg);
  } catch (const rlra::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
