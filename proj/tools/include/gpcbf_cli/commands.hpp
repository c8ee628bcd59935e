#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gpcbf/gp.hpp"
#include "gpcbf/serialization.hpp"

namespace gpcbf::cli {

namespace fs = std::filesystem;

enum ExitCode : int {
  kExitOk = 0,
  kExitOperationalError = 1,
  kExitInfeasibleTemplate = 2,
  kExitBudgetExhausted = 3,
  kExitValidationFailure = 4,
};

/// "0.999", "1-1e-10" or "1e-10-complement".
double parse_confidence(const std::string& text);

/// Published squared-exponential hyperparameters of the jet-engine model.
std::vector<KernelSpec> jet_engine_published_kernels();

struct ProblemOptions {
  std::string builtin = "jet-engine";
  fs::path output = "problem.json";
};
int cmd_problem(const ProblemOptions& o);

struct LearnOptions {
  fs::path problem;
  std::optional<fs::path> data;
  std::optional<int> generate;
  double noise = 0.01;
  std::uint64_t seed = 7;
  std::optional<fs::path> hyperparams;       // pin these kernels
  std::optional<fs::path> init_hyperparams;  // optimizer start
  int restarts = 8;
  bool fit_noise = false;
  int std_grid = 201;
  std::string std_mode = "taylor-grid";
  fs::path output = "model.json";
};
int cmd_learn(const LearnOptions& o);

struct BoundOptions {
  fs::path model;
  fs::path problem;
  fs::path output = "bound.json";
  std::optional<double> epsilon;
  std::vector<double> rkhs_norm_bounds;
  std::vector<double> info_gains;  // computed greedily when empty
  int info_gain_grid = 21;
  std::optional<double> target_halfwidth;
  std::uint64_t trials = 1000000;
  double confidence = 1.0 - 1e-10;
  std::uint64_t seed = 7;
  int grid_per_dim = 0;
  int threads = 0;
};
int cmd_bound(const BoundOptions& o);

struct SynthesizeOptions {
  fs::path model;
  fs::path bound;
  fs::path problem;
  fs::path output = "barrier.json";
  int degree = 2;
  double margin = 1.0;
  int max_iterations = 50;
  int verifier_resolution = 40;
  int verifier_depth = 8;
  int initial_grid = 5;
  std::string sampling = "grid";
  std::uint64_t seed = 0;
  double coefficient_bound = 1e6;
  std::size_t samples_per_iteration = 1;
  std::size_t node_budget = 200000;
  int threads = 0;
};
int cmd_synthesize(const SynthesizeOptions& o);

struct SimulateOptions {
  fs::path barrier;
  fs::path model;
  fs::path problem;
  std::optional<fs::path> bound;
  fs::path out_dir = "traj";
  std::string plant = "true";
  std::optional<int> x0_grid;
  std::vector<double> x0;
  std::optional<int> x0_random;
  std::uint64_t seed = 11;
  double horizon = 10.0;
  double step = 1e-3;
  std::string mode = "worst-case-vertices";
  std::vector<double> fixed_d;
  bool allow_uncertified = false;
  double monotonicity_tolerance = 1e-3;
  int threads = 0;
};
int cmd_simulate(const SimulateOptions& o);

struct PlotOptions {
  std::string kind;  // field | nsweep | trajectories
  fs::path problem;
  std::optional<fs::path> model;
  std::optional<fs::path> barrier;
  std::optional<fs::path> traj_dir;
  std::optional<fs::path> hyperparams;
  fs::path output = "plot.svg";
  int grid = 25;
  int contour_grid = 400;
  std::vector<int> sizes{5, 10, 20, 35, 50, 100};
  std::uint64_t seed = 7;
  double noise = 0.01;
  std::uint64_t trials = 100000;
  double halfwidth = 0.05;
  double confidence = 1.0 - 1e-10;
  int std_grid = 101;
  int threads = 0;
};
int cmd_plot(const PlotOptions& o);

struct ReproduceOptions {
  fs::path out_dir = "jet-engine-run";
  std::uint64_t seed = 7;
  std::uint64_t trials = 1000000;
  int trajectories = 100;
  bool plots = true;
  int threads = 0;
};
int cmd_reproduce_jet_engine(const ReproduceOptions& o);

}  // namespace gpcbf::cli
