#include "gpcbf_cli/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <memory>
#include <random>
#include <sstream>
#include <stdexcept>

#include "gpcbf/barrier.hpp"
#include "gpcbf/confidence.hpp"
#include "gpcbf/control.hpp"
#include "gpcbf/drift_model.hpp"
#include "gpcbf/grid.hpp"
#include "gpcbf/synthesis.hpp"
#include "gpcbf_cli/manifest.hpp"
#include "gpcbf_cli/plot.hpp"

namespace gpcbf::cli {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void log(const std::string& msg) { std::cerr << "gpcbf: " << msg << '\n'; }

Json array_of(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

std::string fmt_vec(const Vector& v) {
  std::string s = "(";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%.6g", i ? ", " : "", v[i]);
    s += buf;
  }
  return s + ")";
}

ProblemFile load_problem(const fs::path& path, RunManifest& man) {
  ProblemFile pf = problem_from_json(read_json_file(path), path.string());
  man.add_input(path);
  return pf;
}

struct LoadedModel {
  Json doc;
  std::shared_ptr<GPPosterior> gp;
};

LoadedModel load_model(const fs::path& path, const ProblemSpec& spec, RunManifest& man) {
  LoadedModel m;
  m.doc = read_json_file(path);
  m.gp = std::make_shared<GPPosterior>(model_from_json(m.doc, path.string()));
  if (m.gp->dim() != spec.n) {
    throw std::invalid_argument(path.string() + ": model dimension " +
                                std::to_string(m.gp->dim()) +
                                " does not match problem dimension " +
                                std::to_string(spec.n));
  }
  m.gp->set_domain(spec.state_box);
  man.add_input(path);
  return m;
}

std::vector<KernelSpec> load_kernels(const fs::path& path, int n) {
  const Json j = read_json_file(path);
  const Json& arr = j.is_array() ? j : j.at("kernels");
  std::vector<KernelSpec> ks;
  for (const auto& k : arr) ks.push_back(kernel_from_json(k, path.string()));
  if (static_cast<int>(ks.size()) != n) {
    throw ParseError(path.string(), 0, "kernels",
                     "expected " + std::to_string(n) + " kernels, got " +
                         std::to_string(ks.size()));
  }
  for (const auto& k : ks) {
    if (k.dim() != n) {
      throw ParseError(path.string(), 0, "length_scales",
                       "expected " + std::to_string(n) + " length scales");
    }
  }
  return ks;
}

std::vector<KernelSpec> heuristic_kernels(const TrainingSet& data, const Box& box) {
  std::vector<KernelSpec> ks;
  for (int j = 0; j < data.dim(); ++j) {
    KernelSpec k;
    const Vector y = data.targets.col(j);
    const double mean = data.size() ? y.mean() : 0.0;
    const double var =
        data.size() > 1 ? (y.array() - mean).square().sum() / (data.size() - 1) : 1.0;
    k.signal_variance = std::max(var, 1e-3);
    k.length_scales = 0.5 * box.widths();
    ks.push_back(k);
  }
  return ks;
}

ConfidenceBox load_confidence_box(const fs::path& path, int n, RunManifest& man) {
  const Json j = read_json_file(path);
  ConfidenceBox box = confidence_box_from_json(
      j.contains("confidence_box") ? j.at("confidence_box") : j, path.string());
  if (box.dim() != n) {
    throw std::invalid_argument(path.string() + ": confidence box dimension " +
                                std::to_string(box.dim()) + " != " + std::to_string(n));
  }
  man.add_input(path);
  return box;
}

StdBound stored_or_computed_std_bound(const LoadedModel& m, const Box& domain) {
  if (m.doc.contains("rho_bar")) {
    const Json& r = m.doc.at("rho_bar");
    StdBound sb;
    const auto vec = [&](const char* key) {
      const Json& a = r.at(key);
      Vector v(static_cast<Eigen::Index>(a.size()));
      for (std::size_t i = 0; i < a.size(); ++i) v[i] = a[i].get<double>();
      return v;
    };
    sb.max_std = vec("max_std");
    sb.grid_max_std = vec("grid_max_std");
    sb.std_margin = vec("std_margin");
    sb.grid_per_dim = r.at("grid_per_dim").get<int>();
    sb.mode = std_bound_mode_from_string(r.at("mode").get<std::string>());
    if (sb.max_std.size() == m.gp->dim()) return sb;
  }
  return max_std_bound(*m.gp, domain, 201, StdBoundMode::kTaylorGrid);
}

/// Uniform draws from X0, choosing a box with probability proportional to
/// its volume.
std::vector<Vector> random_initial_states(const ProblemSpec& spec, int count,
                                          std::uint64_t seed) {
  std::vector<double> volumes;
  for (const auto& b : spec.initial_boxes) volumes.push_back(b.widths().prod());
  std::mt19937_64 rng(seed);
  std::discrete_distribution<std::size_t> pick(volumes.begin(), volumes.end());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Vector> out;
  for (int i = 0; i < count; ++i) {
    const Box& b = spec.initial_boxes[pick(rng)];
    Vector x(spec.n);
    for (int d = 0; d < spec.n; ++d) x[d] = b.lower[d] + unit(rng) * (b.upper[d] - b.lower[d]);
    out.push_back(x);
  }
  return out;
}

void draw_regions(SvgCanvas& canvas, const ProblemSpec& spec) {
  for (const auto& b : spec.initial_boxes) canvas.rect(b, "#2ca02c", 0.25, "#2ca02c");
  for (const auto& b : spec.unsafe_boxes) canvas.rect(b, "#d62728", 0.25, "#d62728");
}

std::vector<std::vector<double>> read_numeric_csv(const fs::path& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  std::vector<std::vector<double>> rows;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      header = false;
      continue;
    }
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(std::move(row));
  }
  return rows;
}

int exit_for(SynthesisOutcome o) {
  switch (o) {
    case SynthesisOutcome::kCertified: return kExitOk;
    case SynthesisOutcome::kInfeasibleTemplate: return kExitInfeasibleTemplate;
    case SynthesisOutcome::kBudgetExhausted: return kExitBudgetExhausted;
  }
  return kExitOperationalError;
}

}  // namespace

double parse_confidence(const std::string& text) {
  const auto parse = [&](const std::string& s) {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("bad number");
    return v;
  };
  double c = 0.0;
  try {
    const std::string suffix = "-complement";
    if (text.size() > suffix.size() &&
        text.compare(text.size() - suffix.size(), suffix.size(), suffix) == 0) {
      c = 1.0 - parse(text.substr(0, text.size() - suffix.size()));
    } else if (text.rfind("1-", 0) == 0) {
      c = 1.0 - parse(text.substr(2));
    } else {
      c = parse(text);
    }
  } catch (const std::exception&) {
    throw std::invalid_argument("invalid confidence '" + text + "'");
  }
  if (!(c > 0.0 && c < 1.0)) {
    throw std::invalid_argument("confidence must lie in (0,1), got '" + text + "'");
  }
  return c;
}

std::vector<KernelSpec> jet_engine_published_kernels() {
  KernelSpec k1;
  k1.signal_variance = 224.4168;
  k1.length_scales = (Vector(2) << 6.6030, 327.5503).finished();
  KernelSpec k2;
  k2.signal_variance = 24.5311;
  k2.length_scales = (Vector(2) << 42.1995, 6.4648e6).finished();
  return {k1, k2};
}

// ---------------------------------------------------------------------------

int cmd_problem(const ProblemOptions& o) {
  RunManifest man("problem");
  man.config()["builtin"] = o.builtin;
  const ProblemFile pf = builtin_problem(o.builtin);
  write_json_file(o.output, to_json(pf));
  man.add_output(o.output);
  man.set_outcome("ok", kExitOk);
  man.write(manifest_path_for(o.output));
  log("wrote " + o.output.string());
  return kExitOk;
}

int cmd_learn(const LearnOptions& o) {
  RunManifest man("learn");
  const auto t0 = Clock::now();
  const ProblemFile pf = load_problem(o.problem, man);
  const ProblemSpec& spec = pf.spec;
  const ControlAffineSystem sys = builtin_system(pf.system);

  if (o.data && o.generate) throw std::invalid_argument("--data and --generate are exclusive");
  TrainingSet data;
  std::optional<std::string> data_ref;
  Json& cfg = man.config();
  cfg["problem"] = o.problem.string();
  if (o.data) {
    data = training_set_from_csv(read_text_file(*o.data), spec.n, o.data->string());
    data.noise_std = o.noise;
    man.add_input(*o.data);
    data_ref = o.data->filename().string();
    cfg["data"] = o.data->string();
  } else if (o.generate) {
    if (!sys.has_drift()) {
      throw std::invalid_argument("system '" + pf.system + "' has no drift oracle to sample");
    }
    if (*o.generate < 1) throw std::invalid_argument("--generate must be positive");
    data = generate_training_data(sys, spec, *o.generate, o.noise, o.seed);
    fs::path csv = o.output;
    csv.replace_extension();
    csv += ".data.csv";
    write_text_file(csv, training_set_to_csv(data));
    man.add_output(csv);
    data_ref = csv.filename().string();
    cfg["generate"] = *o.generate;
    man.add_seed("data", o.seed);
  } else {
    throw std::invalid_argument("one of --data or --generate is required");
  }
  cfg["noise_std"] = o.noise;
  if (data.size() < 1) throw std::invalid_argument("training set is empty");

  std::vector<KernelSpec> kernels;
  Json hyper;
  if (o.hyperparams) {
    kernels = load_kernels(*o.hyperparams, spec.n);
    man.add_input(*o.hyperparams);
    hyper["source"] = "pinned";
  } else {
    std::vector<KernelSpec> init;
    std::string init_source;
    if (o.init_hyperparams) {
      init = load_kernels(*o.init_hyperparams, spec.n);
      man.add_input(*o.init_hyperparams);
      init_source = "file";
    } else if (pf.system == "jet-engine") {
      init = jet_engine_published_kernels();
      init_source = "jet-engine-published";
    } else {
      init = heuristic_kernels(data, spec.state_box);
      init_source = "data-heuristic";
    }
    HyperparameterOptions hopt;
    hopt.restarts = o.restarts;
    hopt.fit_noise = o.fit_noise;
    const HyperparameterFit fit = fit_hyperparameters(data, init, o.seed, hopt);
    kernels = fit.kernels;
    if (o.fit_noise) data.noise_std = fit.noise_std;
    hyper["source"] = "maximum-likelihood";
    hyper["initialization"] = init_source;
    hyper["log_marginal_likelihood"] = fit.log_marginal_likelihood;
    hyper["restarts"] = o.restarts;
    hyper["converged_restarts"] = fit.converged_restarts;
    man.add_seed("hyperparameter_restarts", o.seed);
  }
  man.stage("fit", hyper["source"].get<std::string>(), seconds_since(t0));

  const auto t1 = Clock::now();
  auto gp = GPPosterior::fit(data, kernels);
  const StdBoundMode mode = std_bound_mode_from_string(o.std_mode);
  const StdBound sb = max_std_bound(gp, spec.state_box, o.std_grid, mode);
  man.stage("std-bound", "ok", seconds_since(t1));

  Json doc = model_to_json(gp, data_ref);
  doc["hyperparameters"] = hyper;
  doc["rho_bar"] = to_json(sb);
  write_json_file(o.output, doc);
  man.add_output(o.output);
  cfg["std_grid"] = o.std_grid;
  cfg["std_mode"] = o.std_mode;
  man.set_outcome("ok", kExitOk);
  man.write(manifest_path_for(o.output));
  log("rho_bar = " + fmt_vec(sb.max_std) + ", rho_bar_max = " + format_double(sb.max()));
  log("wrote " + o.output.string());
  return kExitOk;
}

int cmd_bound(const BoundOptions& o) {
  RunManifest man("bound");
  const ProblemFile pf = load_problem(o.problem, man);
  const ProblemSpec& spec = pf.spec;
  const LoadedModel m = load_model(o.model, spec, man);
  const GPPosterior& gp = *m.gp;
  const int n = spec.n;
  if (!o.epsilon && !o.target_halfwidth) {
    throw std::invalid_argument("give --epsilon (analytic) and/or --target-halfwidth (Monte Carlo)");
  }
  const StdBound sb = stored_or_computed_std_bound(m, spec.state_box);

  std::optional<ConfidenceBox> box;
  Json analytic;
  if (o.epsilon) {
    const auto t0 = Clock::now();
    ErrorBoundParams p;
    p.epsilon = *o.epsilon;
    p.sample_count = gp.num_samples();
    if (o.rkhs_norm_bounds.size() == 1) {
      p.rkhs_norm_bounds = Vector::Constant(n, o.rkhs_norm_bounds[0]);
    } else if (static_cast<int>(o.rkhs_norm_bounds.size()) == n) {
      p.rkhs_norm_bounds = Eigen::Map<const Vector>(o.rkhs_norm_bounds.data(), n);
    } else {
      throw std::invalid_argument("--rkhs-norm-bounds needs 1 or n values");
    }
    std::string gain_source = "given";
    if (o.info_gains.empty()) {
      gain_source = "greedy";
      std::vector<Vector> nodes;
      for_each_grid_node(spec.state_box, o.info_gain_grid,
                         [&](const Vector& x) { nodes.push_back(x); });
      Matrix cand(static_cast<Eigen::Index>(nodes.size()), n);
      for (std::size_t i = 0; i < nodes.size(); ++i) cand.row(i) = nodes[i].transpose();
      p.info_gains.resize(n);
      for (int j = 0; j < n; ++j) {
        p.info_gains[j] = information_gain_greedy(gp.kernel(j), cand, gp.num_samples(),
                                                  gp.noise_std());
      }
    } else if (o.info_gains.size() == 1) {
      p.info_gains = Vector::Constant(n, o.info_gains[0]);
    } else if (static_cast<int>(o.info_gains.size()) == n) {
      p.info_gains = Eigen::Map<const Vector>(o.info_gains.data(), n);
    } else {
      throw std::invalid_argument("--info-gains needs 1 or n values");
    }
    const Vector beta = beta_bounds(p);
    box = build_confidence_box(beta, sb, p.epsilon);
    analytic["epsilon"] = p.epsilon;
    analytic["sample_count"] = p.sample_count;
    analytic["rkhs_norm_bounds"] = array_of(p.rkhs_norm_bounds);
    analytic["info_gains"] = array_of(p.info_gains);
    analytic["info_gain_source"] = gain_source;
    if (gain_source == "greedy") analytic["info_gain_grid_per_dim"] = o.info_gain_grid;
    analytic["beta"] = array_of(beta);
    analytic["half_widths"] = array_of(box->half_widths);
    analytic["probability_lower_bound"] = *box->probability_lower_bound;
    man.stage("analytic", "ok", seconds_since(t0));
  }

  Json mc;
  if (o.target_halfwidth) {
    const auto t0 = Clock::now();
    const ControlAffineSystem sys = builtin_system(pf.system);
    if (!sys.has_drift()) {
      throw std::invalid_argument("Monte-Carlo validation needs the true drift of '" +
                                  pf.system + "'");
    }
    if (!(*o.target_halfwidth >= 0.0)) throw std::invalid_argument("--target-halfwidth must be >= 0");
    ConfidenceBox mc_box = uniform_confidence_box(n, *o.target_halfwidth);
    const ContainmentEstimate est = monte_carlo_containment(
        gp, sys, spec, mc_box, o.trials, o.grid_per_dim, o.confidence, o.seed, o.threads);
    mc_box.provenance = ConfidenceBox::Provenance::kMonteCarloValidated;
    box = mc_box;
    mc = to_json(est);
    man.add_seed("monte_carlo", o.seed);
    man.interpretation()["monte_carlo_trial"] = est.trial_semantics;
    man.stage("monte-carlo", "ok", seconds_since(t0));
    log("containment " + format_double(est.fraction()) + ", interval [" +
        format_double(est.lower_bound) + ", " + format_double(est.upper_bound) + "]");
  }

  Json doc;
  doc["format"] = "gpcbf-bound";
  doc["version"] = 1;
  doc["confidence_box"] = to_json(*box);
  doc["rho_bar"] = to_json(sb);
  if (!analytic.is_null()) doc["analytic"] = analytic;
  if (!mc.is_null()) doc["monte_carlo"] = mc;
  write_json_file(o.output, doc);
  man.add_output(o.output);
  Json& cfg = man.config();
  if (o.epsilon) cfg["epsilon"] = *o.epsilon;
  if (o.target_halfwidth) {
    cfg["target_halfwidth"] = *o.target_halfwidth;
    cfg["trials"] = o.trials;
    cfg["confidence"] = o.confidence;
    cfg["grid_per_dim"] = o.grid_per_dim;
  }
  man.set_outcome("ok", kExitOk);
  man.write(manifest_path_for(o.output));
  log("D half-widths " + fmt_vec(box->half_widths) + " (" + to_string(box->provenance) + ")");
  return kExitOk;
}

int cmd_synthesize(const SynthesizeOptions& o) {
  RunManifest man("synthesize");
  const auto t0 = Clock::now();
  const ProblemFile pf = load_problem(o.problem, man);
  const ProblemSpec& spec = pf.spec;
  const ControlAffineSystem sys = builtin_system(pf.system);
  const LoadedModel m = load_model(o.model, spec, man);
  const ConfidenceBox box = load_confidence_box(o.bound, spec.n, man);
  if (o.degree < 0) throw std::invalid_argument("--degree must be >= 0");

  auto drift = std::make_shared<GPMeanDrift>(m.gp);
  const SynthesisProblem problem = make_synthesis_problem(spec, sys, drift, box);
  const BarrierTemplate tmpl(spec.n, o.degree, o.coefficient_bound);

  CegisConfig cfg;
  cfg.margin = o.margin;
  cfg.max_iterations = o.max_iterations;
  cfg.initial_per_dim = o.initial_grid;
  if (o.sampling == "grid") {
    cfg.sampling = SamplingScheme::kGrid;
  } else if (o.sampling == "lhs") {
    cfg.sampling = SamplingScheme::kLatinHypercube;
  } else {
    throw std::invalid_argument("--sampling must be grid or lhs");
  }
  cfg.seed = o.seed;
  cfg.samples_per_iteration = o.samples_per_iteration;
  cfg.solver.node_budget = o.node_budget;
  cfg.verifier.resolution = o.verifier_resolution;
  cfg.verifier.max_depth = o.verifier_depth;
  cfg.verifier.threads = o.threads;

  const SynthesisResult res = cegis(tmpl, problem, cfg);

  Json doc;
  if (res.candidate) {
    doc = barrier_to_json(*res.candidate, o.margin, res.certificate);
  } else {
    doc["format"] = "gpcbf-barrier";
    doc["version"] = 1;
    doc["n"] = spec.n;
    doc["degree"] = o.degree;
    doc["basis_ordering"] = "graded-lexicographic";
    doc["coefficients"] = nullptr;
    doc["margin"] = o.margin;
    doc["A_max"] = o.coefficient_bound;
    doc["certified"] = false;
    doc["certificate"] = nullptr;
  }
  doc["outcome"] = to_string(res.outcome);
  doc["iterations"] = res.iterations;
  doc["error_box"] = to_json(box);
  Json trace = Json::array();
  for (const auto& r : res.trace) {
    Json added = Json::array();
    for (const auto& c : r.added) added.push_back(to_json(c));
    trace.push_back({{"iteration", r.iteration},
                     {"samples", r.samples},
                     {"solver_nodes", r.solver_nodes},
                     {"status", to_string(r.status)},
                     {"added", added}});
  }
  doc["trace"] = trace;
  write_json_file(o.output, doc);
  man.add_output(o.output);

  Json& c = man.config();
  c["degree"] = o.degree;
  c["margin"] = o.margin;
  c["max_iterations"] = o.max_iterations;
  c["initial_grid"] = o.initial_grid;
  c["sampling"] = o.sampling;
  c["samples_per_iteration"] = o.samples_per_iteration;
  c["node_budget"] = o.node_budget;
  c["coefficient_bound"] = o.coefficient_bound;
  c["verifier_resolution"] = o.verifier_resolution;
  c["verifier_depth"] = o.verifier_depth;
  man.add_seed("sampling", o.seed);
  man.interpretation()["verifier_mode"] = "lipschitz-adaptive-grid";
  man.interpretation()["error_box_provenance"] = to_string(box.provenance);
  const int code = exit_for(res.outcome);
  man.stage("cegis", to_string(res.outcome), seconds_since(t0));
  man.set_outcome(to_string(res.outcome), code);
  man.write(manifest_path_for(o.output));
  log("synthesis " + to_string(res.outcome) + " after " + std::to_string(res.iterations) +
      " iteration(s)");
  if (res.candidate) log("coefficients " + fmt_vec(res.candidate->coefficients));
  return code;
}

int cmd_simulate(const SimulateOptions& o) {
  RunManifest man("simulate");
  const auto t0 = Clock::now();
  const ProblemFile pf = load_problem(o.problem, man);
  const ProblemSpec& spec = pf.spec;
  const ControlAffineSystem sys = builtin_system(pf.system);
  const LoadedModel m = load_model(o.model, spec, man);
  const BarrierFile bf = barrier_from_json(read_json_file(o.barrier), o.barrier.string());
  man.add_input(o.barrier);
  if (bf.candidate.basis.dim() != spec.n) {
    throw std::invalid_argument("barrier dimension does not match the problem");
  }
  if (!bf.certified && !o.allow_uncertified) {
    throw std::invalid_argument(o.barrier.string() +
                                " is not certified; pass --allow-uncertified for diagnostics");
  }

  const RobustnessMode mode = robustness_mode_from_string(o.mode);
  ConfidenceBox box = uniform_confidence_box(spec.n, 0.0);
  if (o.bound) {
    box = load_confidence_box(*o.bound, spec.n, man);
  } else if (mode == RobustnessMode::kWorstCaseVertices) {
    throw std::invalid_argument("--bound is required in worst-case-vertices mode");
  }
  std::optional<Vector> fixed_d;
  if (mode == RobustnessMode::kFixedD) {
    if (o.fixed_d.empty()) {
      fixed_d = Vector::Zero(spec.n);
    } else if (static_cast<int>(o.fixed_d.size()) == spec.n) {
      fixed_d = Eigen::Map<const Vector>(o.fixed_d.data(), spec.n);
    } else {
      throw std::invalid_argument("--fixed-d needs n values");
    }
  }
  auto drift = std::make_shared<GPMeanDrift>(m.gp);
  const SafeController ctrl(bf.candidate, drift, sys.input_map, spec.inputs, box, mode, fixed_d);

  ControlAffineSystem plant;
  if (o.plant == "true") {
    if (!sys.has_drift()) throw std::invalid_argument("no true drift for '" + pf.system + "'");
    plant = sys;
  } else if (o.plant == "mean") {
    plant = mean_plant(drift, sys);
  } else {
    throw std::invalid_argument("--plant must be true or mean");
  }

  const int given = (o.x0_grid ? 1 : 0) + (o.x0.empty() ? 0 : 1) + (o.x0_random ? 1 : 0);
  if (given != 1) {
    throw std::invalid_argument("give exactly one of --x0-grid, --x0, --x0-random");
  }
  std::vector<Vector> x0s;
  std::string x0_source;
  if (o.x0_grid) {
    for (const auto& b : spec.initial_boxes) {
      for_each_grid_node(b, *o.x0_grid, [&](const Vector& x) { x0s.push_back(x); });
    }
    x0_source = "grid";
  } else if (!o.x0.empty()) {
    if (o.x0.size() % spec.n != 0) throw std::invalid_argument("--x0 needs a multiple of n values");
    for (std::size_t i = 0; i < o.x0.size(); i += spec.n) {
      x0s.push_back(Eigen::Map<const Vector>(o.x0.data() + i, spec.n));
    }
    x0_source = "explicit";
  } else {
    x0s = random_initial_states(spec, *o.x0_random, o.seed);
    man.add_seed("initial_states", o.seed);
    x0_source = "uniform-random";
  }

  const std::vector<BatchRun> runs =
      simulate_batch(ctrl, plant, spec, x0s, o.horizon, o.step, o.threads);
  man.stage("simulate", "ok", seconds_since(t0));

  fs::create_directories(o.out_dir);
  Json items = Json::array();
  std::size_t unsafe_traj = 0, no_input = 0, errors = 0, exits = 0, mono_fail = 0;
  double max_increase = 0.0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const BatchRun& r = runs[i];
    Json item;
    item["index"] = i;
    item["x0"] = array_of(x0s[i]);
    if (r.trajectory) {
      const Trajectory& t = *r.trajectory;
      char name[32];
      std::snprintf(name, sizeof name, "traj_%04zu.csv", i);
      const fs::path csv = o.out_dir / name;
      write_text_file(csv, trajectory_to_csv(t, spec.m));
      man.add_output(csv);
      const SafetyReport s = check_trajectory_safety(t, spec);
      const MonotonicityReport mr =
          barrier_monotonicity_check(t, bf.candidate, o.monotonicity_tolerance);
      item["file"] = name;
      item["steps"] = t.size() - 1;
      item["final_time"] = t.times.back();
      item["final_state"] = array_of(t.states.back());
      item["exited_state_box"] = t.exited_state_box;
      item["unsafe_steps"] = s.violations;
      item["first_violation_time"] =
          s.first_violation_time ? Json(*s.first_violation_time) : Json(nullptr);
      item["max_barrier_increase"] = mr.max_increase;
      item["monotonicity_violations"] = mr.violations;
      unsafe_traj += s.safe() ? 0 : 1;
      exits += t.exited_state_box ? 1 : 0;
      mono_fail += mr.holds() ? 0 : 1;
      max_increase = std::max(max_increase, mr.max_increase);
    } else if (r.failure_state) {
      ++no_input;
      item["no_safe_input_state"] = array_of(*r.failure_state);
      item["error"] = r.error;
    } else {
      ++errors;
      item["error"] = r.error;
    }
    items.push_back(item);
  }

  const bool ok = unsafe_traj == 0 && no_input == 0 && errors == 0 && mono_fail == 0;
  Json summary;
  summary["format"] = "gpcbf-simulation-summary";
  summary["version"] = 1;
  summary["plant"] = o.plant;
  summary["robustness_mode"] = to_string(mode);
  summary["horizon"] = o.horizon;
  summary["step"] = o.step;
  summary["initial_states"] = x0_source;
  summary["monotonicity_tolerance"] = o.monotonicity_tolerance;
  summary["trajectories"] = runs.size();
  summary["unsafe_trajectories"] = unsafe_traj;
  summary["no_safe_input_events"] = no_input;
  summary["errors"] = errors;
  summary["exited_state_box"] = exits;
  summary["max_barrier_increase"] = max_increase;
  summary["monotonicity_failures"] = mono_fail;
  summary["safe"] = ok;
  summary["runs"] = items;
  const fs::path summary_path = o.out_dir / "summary.json";
  write_json_file(summary_path, summary);
  man.add_output(summary_path);

  Json& c = man.config();
  c["plant"] = o.plant;
  c["horizon"] = o.horizon;
  c["step"] = o.step;
  c["trajectories"] = runs.size();
  c["allow_uncertified"] = o.allow_uncertified;
  man.interpretation()["robustness_mode"] = to_string(mode);
  const int code = ok ? kExitOk : kExitValidationFailure;
  man.set_outcome(ok ? "safe" : "validation-failure", code);
  man.write(manifest_path_for(summary_path));
  log(std::to_string(runs.size()) + " trajectories (" + o.plant + " plant): " +
      std::to_string(unsafe_traj) + " unsafe, " + std::to_string(no_input) +
      " without a safe input, " + std::to_string(exits) + " left X, max B increase " +
      format_double(max_increase));
  return code;
}

// ---------------------------------------------------------------------------
// plot

namespace {

void require_planar(const ProblemSpec& spec) {
  if (spec.n != 2) throw std::invalid_argument("plots need a 2-D state space");
}

fs::path sibling(const fs::path& output, const std::string& suffix) {
  fs::path p = output;
  p.replace_extension();
  p += suffix;
  return p;
}

void plot_field(const PlotOptions& o, RunManifest& man) {
  if (!o.model) throw std::invalid_argument("plot field needs --model");
  const ProblemFile pf = load_problem(o.problem, man);
  const ProblemSpec& spec = pf.spec;
  require_planar(spec);
  const LoadedModel m = load_model(*o.model, spec, man);
  const GPPosterior& gp = *m.gp;
  const int g = std::max(o.grid, 2);

  struct Node {
    Vector x, mu, sd;
  };
  std::vector<Node> nodes;
  double sd_max = 0.0, mu_max = 0.0;
  for_each_grid_node(spec.state_box, g, [&](const Vector& x) {
    Node nd{x, gp.mean(x), gp.variance(x).cwiseMax(0.0).cwiseSqrt()};
    sd_max = std::max(sd_max, nd.sd.norm());
    mu_max = std::max(mu_max, nd.mu.norm());
    nodes.push_back(std::move(nd));
  });

  std::string csv = "x1,x2,mu1,mu2,std1,std2\n";
  for (const auto& nd : nodes) {
    csv += format_double(nd.x[0]) + "," + format_double(nd.x[1]) + "," +
           format_double(nd.mu[0]) + "," + format_double(nd.mu[1]) + "," +
           format_double(nd.sd[0]) + "," + format_double(nd.sd[1]) + "\n";
  }
  const fs::path csv_path = sibling(o.output, ".csv");
  write_text_file(csv_path, csv);
  man.add_output(csv_path);

  SvgCanvas canvas(spec.state_box, 640, 640);
  const Vector w = spec.state_box.widths();
  const Vector cell = w / (g - 1);
  for (const auto& nd : nodes) {
    Box b(nd.x - 0.5 * cell, nd.x + 0.5 * cell);
    b.lower = b.lower.cwiseMax(spec.state_box.lower);
    b.upper = b.upper.cwiseMin(spec.state_box.upper);
    canvas.rect(b, colormap(sd_max > 0 ? nd.sd.norm() / sd_max : 0.0), 1.0);
  }
  draw_regions(canvas, spec);
  // Arrows are normalized per axis so both components stay visible.
  for (const auto& nd : nodes) {
    const double len = nd.mu.norm();
    if (len == 0.0) continue;
    const Vector dir = nd.mu / len;
    const double scale = 0.4 * std::sqrt(len / std::max(mu_max, 1e-300));
    const double x1 = nd.x[0] + scale * cell[0] * dir[0];
    const double y1 = nd.x[1] + scale * cell[1] * dir[1];
    canvas.line(nd.x[0], nd.x[1], x1, y1, "white", 1.0);
    canvas.circle(x1, y1, 1.2, "white");
  }
  canvas.axes("x1", "x2");
  canvas.text_px(60, 20, "posterior mean field, color = |std| (max " +
                              format_double(sd_max).substr(0, 8) + ")", 12);
  write_text_file(o.output, canvas.str());
  man.add_output(o.output);
}

void plot_nsweep(const PlotOptions& o, RunManifest& man) {
  const ProblemFile pf = load_problem(o.problem, man);
  const ProblemSpec& spec = pf.spec;
  const ControlAffineSystem sys = builtin_system(pf.system);
  if (!sys.has_drift()) throw std::invalid_argument("N-sweep needs a true drift");
  if (o.sizes.empty()) throw std::invalid_argument("--sizes is empty");

  std::vector<KernelSpec> kernels;
  std::string kernel_source;
  if (o.hyperparams) {
    kernels = load_kernels(*o.hyperparams, spec.n);
    man.add_input(*o.hyperparams);
    kernel_source = "file";
  } else if (o.model) {
    kernels = load_model(*o.model, spec, man).gp->kernels();
    kernel_source = "model";
  } else if (pf.system == "jet-engine") {
    kernels = jet_engine_published_kernels();
    kernel_source = "jet-engine-published";
  } else {
    throw std::invalid_argument("N-sweep needs --hyperparams or --model");
  }
  const int n_max = *std::max_element(o.sizes.begin(), o.sizes.end());
  const TrainingSet all = generate_training_data(sys, spec, n_max, o.noise, o.seed);
  const ConfidenceBox box = uniform_confidence_box(spec.n, o.halfwidth);

  std::string csv = "N,rho_bar_max,grid_max_std,mc_fraction,mc_lower_bound,mc_upper_bound\n";
  std::vector<std::array<double, 2>> rho_pts, lb_pts;
  double rho_hi = 0.0;
  for (int count : o.sizes) {
    if (count < 1) throw std::invalid_argument("--sizes must be positive");
    std::optional<GPPosterior> fitted;
    try {
      fitted = GPPosterior::fit(all.prefix(count), kernels);
    } catch (const IllConditionedError& e) {
      csv += std::to_string(count) + ",nan,nan,nan,nan,nan\n";
      log("N = " + std::to_string(count) + ": skipped, " + e.what());
      man.interpretation()["ill_conditioned_sizes"].push_back(count);
      continue;
    }
    const GPPosterior& gp = *fitted;
    const StdBound sb = max_std_bound(gp, spec.state_box, o.std_grid);
    const ContainmentEstimate est = monte_carlo_containment(
        gp, sys, spec, box, o.trials, 0, o.confidence, o.seed, o.threads);
    csv += std::to_string(count) + "," + format_double(sb.max()) + "," +
           format_double(sb.grid_max_std.maxCoeff()) + "," + format_double(est.fraction()) +
           "," + format_double(est.lower_bound) + "," + format_double(est.upper_bound) + "\n";
    rho_pts.push_back({static_cast<double>(count), sb.max()});
    lb_pts.push_back({static_cast<double>(count), est.lower_bound});
    rho_hi = std::max(rho_hi, sb.max());
    log("N = " + std::to_string(count) + ": rho_bar_max " + format_double(sb.max()) +
        ", lower bound " + format_double(est.lower_bound));
  }
  const fs::path csv_path = sibling(o.output, ".csv");
  write_text_file(csv_path, csv);
  man.add_output(csv_path);

  const double n_lo = *std::min_element(o.sizes.begin(), o.sizes.end());
  const double n_hi = std::max(static_cast<double>(n_max), n_lo + 1.0);
  const auto panel = [&](const std::vector<std::array<double, 2>>& pts, double ylo,
                         double yhi, const std::string& label, const fs::path& path) {
    SvgCanvas canvas(Box((Vector(2) << n_lo, ylo).finished(),
                         (Vector(2) << n_hi, yhi).finished()),
                     640, 400, 50);
    canvas.polyline(pts, "#1f77b4", 2.0);
    for (const auto& p : pts) canvas.circle(p[0], p[1], 3.0, "#1f77b4");
    canvas.axes("N", label);
    write_text_file(path, canvas.str());
    man.add_output(path);
  };
  panel(rho_pts, 0.0, rho_hi > 0 ? 1.1 * rho_hi : 1.0, "rho_bar_max", o.output);
  panel(lb_pts, 0.0, 1.0, "containment lower bound", sibling(o.output, "_lower_bound.svg"));
  man.config()["kernels"] = kernel_source;
  man.add_seed("data", o.seed);
}

void plot_trajectories(const PlotOptions& o, RunManifest& man) {
  if (!o.barrier) throw std::invalid_argument("plot trajectories needs --barrier");
  const ProblemFile pf = load_problem(o.problem, man);
  const ProblemSpec& spec = pf.spec;
  require_planar(spec);
  const BarrierFile bf = barrier_from_json(read_json_file(*o.barrier), o.barrier->string());
  man.add_input(*o.barrier);

  const auto fn = [&](double x, double y) {
    return bf.candidate.value((Vector(2) << x, y).finished());
  };
  const std::vector<Segment> segs =
      zero_contour(fn, spec.state_box, o.contour_grid, o.contour_grid);
  std::string csv = "x_start,y_start,x_end,y_end\n";
  for (const auto& s : segs) {
    csv += format_double(s[0]) + "," + format_double(s[1]) + "," + format_double(s[2]) +
           "," + format_double(s[3]) + "\n";
  }
  const fs::path csv_path = sibling(o.output, "_contour.csv");
  write_text_file(csv_path, csv);
  man.add_output(csv_path);

  SvgCanvas canvas(spec.state_box, 640, 640);
  draw_regions(canvas, spec);
  for (const auto& s : segs) canvas.line(s[0], s[1], s[2], s[3], "black", 1.5);

  std::vector<fs::path> files;
  if (o.traj_dir && fs::exists(*o.traj_dir)) {
    for (const auto& e : fs::directory_iterator(*o.traj_dir)) {
      if (e.path().extension() == ".csv") files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    const auto rows = read_numeric_csv(f);
    std::vector<std::array<double, 2>> pts;
    for (std::size_t i = 0; i < rows.size(); i += std::max<std::size_t>(1, rows.size() / 500)) {
      pts.push_back({rows[i][1], rows[i][2]});
    }
    if (!rows.empty()) pts.push_back({rows.back()[1], rows.back()[2]});
    canvas.polyline(pts, "#1f77b4", 0.8);
    if (!pts.empty()) canvas.circle(pts.front()[0], pts.front()[1], 1.5, "#1f77b4");
  }
  canvas.axes("x1", "x2");
  canvas.text_px(60, 20, std::to_string(files.size()) + " trajectories, black: B(x) = 0", 12);
  write_text_file(o.output, canvas.str());
  man.add_output(o.output);
  man.config()["trajectories"] = files.size();
}

}  // namespace

int cmd_plot(const PlotOptions& o) {
  RunManifest man("plot " + o.kind);
  man.config()["kind"] = o.kind;
  if (o.kind == "field") {
    plot_field(o, man);
  } else if (o.kind == "nsweep") {
    plot_nsweep(o, man);
  } else if (o.kind == "trajectories") {
    plot_trajectories(o, man);
  } else {
    throw std::invalid_argument("unknown plot kind '" + o.kind + "'");
  }
  man.set_outcome("ok", kExitOk);
  man.write(manifest_path_for(o.output));
  log("wrote " + o.output.string());
  return kExitOk;
}

// ---------------------------------------------------------------------------

int cmd_reproduce_jet_engine(const ReproduceOptions& o) {
  RunManifest man("reproduce-jet-engine");
  fs::create_directories(o.out_dir);
  const fs::path dir = o.out_dir;
  int worst = kExitOk;
  const auto run = [&](const std::string& name, const std::function<int()>& step) {
    const auto t0 = Clock::now();
    log("stage " + name);
    const int code = step();
    man.stage(name, code == kExitOk ? "ok" : "exit " + std::to_string(code),
              seconds_since(t0));
    if (worst == kExitOk) worst = code;
    return code;
  };

  run("problem", [&] {
    return cmd_problem({.builtin = "jet-engine", .output = dir / "problem.json"});
  });
  run("learn", [&] {
    LearnOptions l;
    l.problem = dir / "problem.json";
    l.generate = 35;
    l.noise = 0.01;
    l.seed = o.seed;
    l.output = dir / "model.json";
    return cmd_learn(l);
  });
  run("bound", [&] {
    BoundOptions b;
    b.model = dir / "model.json";
    b.problem = dir / "problem.json";
    b.output = dir / "bound.json";
    b.target_halfwidth = 0.05;
    b.trials = o.trials;
    b.confidence = 1.0 - 1e-10;
    b.seed = o.seed;
    b.threads = o.threads;
    return cmd_bound(b);
  });
  const int synth = run("synthesize", [&] {
    SynthesizeOptions s;
    s.model = dir / "model.json";
    s.bound = dir / "bound.json";
    s.problem = dir / "problem.json";
    s.output = dir / "barrier.json";
    s.threads = o.threads;
    return cmd_synthesize(s);
  });
  if (synth == kExitOk) {
    for (const std::string plant : {"true", "mean"}) {
      run("simulate-" + plant, [&] {
        SimulateOptions s;
        s.barrier = dir / "barrier.json";
        s.model = dir / "model.json";
        s.problem = dir / "problem.json";
        s.bound = dir / "bound.json";
        s.out_dir = dir / ("traj_" + plant);
        s.plant = plant;
        s.x0_random = o.trajectories;
        s.seed = o.seed + 4;
        s.monotonicity_tolerance = plant == "true" ? 1e-3 : 1e-6;
        s.threads = o.threads;
        return cmd_simulate(s);
      });
    }
  }
  if (o.plots) {
    run("plot-field", [&] {
      PlotOptions p;
      p.kind = "field";
      p.problem = dir / "problem.json";
      p.model = dir / "model.json";
      p.output = dir / "field.svg";
      return cmd_plot(p);
    });
    run("plot-nsweep", [&] {
      PlotOptions p;
      p.kind = "nsweep";
      p.problem = dir / "problem.json";
      p.seed = o.seed;
      p.output = dir / "nsweep.svg";
      p.threads = o.threads;
      return cmd_plot(p);
    });
    if (synth == kExitOk) {
      run("plot-trajectories", [&] {
        PlotOptions p;
        p.kind = "trajectories";
        p.problem = dir / "problem.json";
        p.barrier = dir / "barrier.json";
        p.traj_dir = dir / "traj_true";
        p.output = dir / "trajectories.svg";
        return cmd_plot(p);
      });
    }
  }
  man.config()["out_dir"] = o.out_dir.string();
  man.config()["trials"] = o.trials;
  man.config()["trajectories"] = o.trajectories;
  man.add_seed("pipeline", o.seed);
  man.set_outcome(worst == kExitOk ? "ok" : "failed", worst);
  man.write(dir / "reproduce.manifest.json");
  return worst;
}

}  // namespace gpcbf::cli
