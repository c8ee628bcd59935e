#include <CLI11.hpp>

#include <iostream>
#include <string>

#include "gpcbf/control.hpp"
#include "gpcbf/gp.hpp"
#include "gpcbf/serialization.hpp"
#include "gpcbf_cli/commands.hpp"
#include "gpcbf_cli/manifest.hpp"

using namespace gpcbf;
using namespace gpcbf::cli;

int main(int argc, char** argv) {
  CLI::App app{"Learn drift dynamics with GPs, synthesize robust control barrier "
               "functions and validate the resulting controller."};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  ProblemOptions problem_opts;
  auto* problem = app.add_subcommand("problem", "Write a builtin problem file");
  problem->add_option("--builtin", problem_opts.builtin, "Builtin problem name")
      ->capture_default_str();
  problem->add_option("-o,--output", problem_opts.output)->capture_default_str();

  LearnOptions learn_opts;
  auto* learn = app.add_subcommand("learn", "Fit the GP drift model and bound its std");
  learn->add_option("--problem", learn_opts.problem)->required()->check(CLI::ExistingFile);
  auto* data_opt = learn->add_option("--data", learn_opts.data, "CSV x1..xn,y1..yn")
                       ->check(CLI::ExistingFile);
  learn->add_option("--generate", learn_opts.generate, "Sample N noisy drift measurements")
      ->excludes(data_opt);
  learn->add_option("--noise", learn_opts.noise, "Measurement noise std")->capture_default_str();
  learn->add_option("--seed", learn_opts.seed)->capture_default_str();
  learn->add_option("--hyperparams", learn_opts.hyperparams, "Pin kernels from this JSON")
      ->check(CLI::ExistingFile);
  learn->add_option("--init-hyperparams", learn_opts.init_hyperparams,
                    "Start the likelihood fit from these kernels")
      ->check(CLI::ExistingFile);
  learn->add_option("--restarts", learn_opts.restarts)->capture_default_str();
  learn->add_flag("--fit-noise", learn_opts.fit_noise);
  learn->add_option("--std-grid", learn_opts.std_grid)->capture_default_str();
  learn->add_option("--std-mode", learn_opts.std_mode)
      ->check(CLI::IsMember({"lipschitz-grid", "taylor-grid", "branch-and-bound"}))
      ->capture_default_str();
  learn->add_option("-o,--output", learn_opts.output)->capture_default_str();

  BoundOptions bound_opts;
  std::string bound_conf = "1-1e-10";
  auto* bound = app.add_subcommand("bound", "Build the model-error box D");
  bound->add_option("--model", bound_opts.model)->required()->check(CLI::ExistingFile);
  bound->add_option("--problem", bound_opts.problem)->required()->check(CLI::ExistingFile);
  bound->add_option("--epsilon", bound_opts.epsilon, "Per-output failure probability");
  bound->add_option("--rkhs-norm-bounds", bound_opts.rkhs_norm_bounds);
  bound->add_option("--info-gains", bound_opts.info_gains,
                    "Information gains; greedy estimate when omitted");
  bound->add_option("--info-gain-grid", bound_opts.info_gain_grid)->capture_default_str();
  bound->add_option("--target-halfwidth", bound_opts.target_halfwidth,
                    "Half-width of D validated by Monte Carlo");
  bound->add_option("--trials", bound_opts.trials)->capture_default_str();
  bound->add_option("--confidence", bound_conf, "e.g. 0.999, 1-1e-10, 1e-10-complement")
      ->capture_default_str();
  bound->add_option("--seed", bound_opts.seed)->capture_default_str();
  bound->add_option("--grid-per-dim", bound_opts.grid_per_dim,
                    "Draw trial states from a grid instead of the box")
      ->capture_default_str();
  bound->add_option("--threads", bound_opts.threads);
  bound->add_option("-o,--output", bound_opts.output)->capture_default_str();

  SynthesizeOptions syn_opts;
  auto* synth = app.add_subcommand("synthesize", "Run CEGIS for a polynomial barrier");
  synth->add_option("--model", syn_opts.model)->required()->check(CLI::ExistingFile);
  synth->add_option("--bound", syn_opts.bound)->required()->check(CLI::ExistingFile);
  synth->add_option("--problem", syn_opts.problem)->required()->check(CLI::ExistingFile);
  synth->add_option("--degree", syn_opts.degree)->capture_default_str();
  synth->add_option("--margin", syn_opts.margin)->capture_default_str();
  synth->add_option("--max-iterations", syn_opts.max_iterations)->capture_default_str();
  synth->add_option("--verifier-resolution", syn_opts.verifier_resolution)
      ->capture_default_str();
  synth->add_option("--verifier-depth", syn_opts.verifier_depth)->capture_default_str();
  synth->add_option("--initial-grid", syn_opts.initial_grid,
                    "Initial samples per dimension and region")
      ->capture_default_str();
  synth->add_option("--sampling", syn_opts.sampling)
      ->check(CLI::IsMember({"grid", "lhs"}))
      ->capture_default_str();
  synth->add_option("--seed", syn_opts.seed)->capture_default_str();
  synth->add_option("--coefficient-bound", syn_opts.coefficient_bound)->capture_default_str();
  synth->add_option("--samples-per-iteration", syn_opts.samples_per_iteration)
      ->capture_default_str();
  synth->add_option("--node-budget", syn_opts.node_budget)->capture_default_str();
  synth->add_option("--threads", syn_opts.threads);
  synth->add_option("-o,--output", syn_opts.output)->capture_default_str();

  SimulateOptions sim_opts;
  auto* sim = app.add_subcommand("simulate", "Closed-loop simulation of the safe controller");
  sim->add_option("--barrier", sim_opts.barrier)->required()->check(CLI::ExistingFile);
  sim->add_option("--model", sim_opts.model)->required()->check(CLI::ExistingFile);
  sim->add_option("--problem", sim_opts.problem)->required()->check(CLI::ExistingFile);
  sim->add_option("--bound", sim_opts.bound)->check(CLI::ExistingFile);
  sim->add_option("--out-dir", sim_opts.out_dir)->capture_default_str();
  sim->add_option("--plant", sim_opts.plant)
      ->check(CLI::IsMember({"true", "mean"}))
      ->capture_default_str();
  sim->add_option("--x0-grid", sim_opts.x0_grid, "Grid nodes per dimension over X0");
  sim->add_option("--x0", sim_opts.x0, "Initial states, n values each");
  sim->add_option("--x0-random", sim_opts.x0_random, "Uniform draws from X0");
  sim->add_option("--seed", sim_opts.seed)->capture_default_str();
  sim->add_option("--horizon", sim_opts.horizon)->capture_default_str();
  sim->add_option("--step", sim_opts.step)->capture_default_str();
  sim->add_option("--mode", sim_opts.mode)
      ->check(CLI::IsMember({"worst-case-vertices", "fixed-d"}))
      ->capture_default_str();
  sim->add_option("--fixed-d", sim_opts.fixed_d);
  sim->add_flag("--allow-uncertified", sim_opts.allow_uncertified);
  sim->add_option("--monotonicity-tolerance", sim_opts.monotonicity_tolerance)
      ->capture_default_str();
  sim->add_option("--threads", sim_opts.threads);

  PlotOptions plot_opts;
  std::string plot_conf = "1-1e-10";
  auto* plot = app.add_subcommand("plot", "Emit SVG/CSV figures");
  plot->add_option("kind", plot_opts.kind, "field | nsweep | trajectories")
      ->required()
      ->check(CLI::IsMember({"field", "nsweep", "trajectories"}));
  plot->add_option("--problem", plot_opts.problem)->required()->check(CLI::ExistingFile);
  plot->add_option("--model", plot_opts.model)->check(CLI::ExistingFile);
  plot->add_option("--barrier", plot_opts.barrier)->check(CLI::ExistingFile);
  plot->add_option("--traj-dir", plot_opts.traj_dir);
  plot->add_option("--hyperparams", plot_opts.hyperparams)->check(CLI::ExistingFile);
  plot->add_option("--grid", plot_opts.grid)->capture_default_str();
  plot->add_option("--contour-grid", plot_opts.contour_grid)->capture_default_str();
  plot->add_option("--sizes", plot_opts.sizes)->capture_default_str();
  plot->add_option("--seed", plot_opts.seed)->capture_default_str();
  plot->add_option("--noise", plot_opts.noise)->capture_default_str();
  plot->add_option("--trials", plot_opts.trials)->capture_default_str();
  plot->add_option("--halfwidth", plot_opts.halfwidth)->capture_default_str();
  plot->add_option("--confidence", plot_conf)->capture_default_str();
  plot->add_option("--std-grid", plot_opts.std_grid)->capture_default_str();
  plot->add_option("--threads", plot_opts.threads);
  plot->add_option("-o,--output", plot_opts.output)->capture_default_str();

  ReproduceOptions rep_opts;
  auto* rep = app.add_subcommand("reproduce-jet-engine",
                                 "Run every stage on the jet-engine benchmark");
  rep->add_option("--out-dir", rep_opts.out_dir)->capture_default_str();
  rep->add_option("--seed", rep_opts.seed)->capture_default_str();
  rep->add_option("--trials", rep_opts.trials)->capture_default_str();
  rep->add_option("--trajectories", rep_opts.trajectories)->capture_default_str();
  rep->add_flag("!--no-plots", rep_opts.plots);
  rep->add_option("--threads", rep_opts.threads);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitOperationalError;
  }

  try {
    if (*problem) return cmd_problem(problem_opts);
    if (*learn) return cmd_learn(learn_opts);
    if (*bound) {
      bound_opts.confidence = parse_confidence(bound_conf);
      return cmd_bound(bound_opts);
    }
    if (*synth) return cmd_synthesize(syn_opts);
    if (*sim) return cmd_simulate(sim_opts);
    if (*plot) {
      plot_opts.confidence = parse_confidence(plot_conf);
      return cmd_plot(plot_opts);
    }
    if (*rep) return cmd_reproduce_jet_engine(rep_opts);
  } catch (const ParseError& e) {
    std::cerr << "gpcbf: " << e.what() << '\n';
  } catch (const IllConditionedError& e) {
    std::cerr << "gpcbf: ill-conditioned GP fit (output " << e.output()
              << ", rcond " << e.rcond() << "): " << e.what() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "gpcbf: " << e.what() << '\n';
  }
  return kExitOperationalError;
}
