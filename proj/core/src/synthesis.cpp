#include "gpcbf/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <utility>

#include "gpcbf/grid.hpp"
#include "gpcbf/linear_program.hpp"

namespace gpcbf {

SynthesisProblem make_synthesis_problem(const ProblemSpec& spec,
                                        const ControlAffineSystem& sys,
                                        std::shared_ptr<const DriftModel> drift,
                                        ConfidenceBox error_box) {
  SynthesisProblem p;
  p.spec = spec;
  p.drift = std::move(drift);
  p.input_map = sys.input_map;
  p.input_map_lipschitz = sys.input_map_lipschitz;
  p.error_box = std::move(error_box);
  return p;
}

std::string to_string(Condition c) {
  switch (c) {
    case Condition::kInit: return "init";
    case Condition::kUnsafe: return "unsafe";
    case Condition::kFlow: return "flow";
  }
  return "flow";
}

Condition condition_from_string(const std::string& s) {
  if (s == "init") return Condition::kInit;
  if (s == "unsafe") return Condition::kUnsafe;
  if (s == "flow") return Condition::kFlow;
  throw std::invalid_argument("unknown condition '" + s + "'");
}

const std::vector<Vector>& SampleSet::of(Condition c) const {
  switch (c) {
    case Condition::kInit: return init;
    case Condition::kUnsafe: return unsafe;
    case Condition::kFlow: return flow;
  }
  return flow;
}

std::vector<Vector>& SampleSet::of(Condition c) {
  return const_cast<std::vector<Vector>&>(std::as_const(*this).of(c));
}

bool SampleSet::contains(Condition c, const Vector& x) const {
  const auto& pts = of(c);
  return std::any_of(pts.begin(), pts.end(),
                     [&](const Vector& p) { return p == x; });
}

void SampleSet::validate(const ProblemSpec& spec) const {
  for (const auto& x : init) {
    if (!spec.in_initial_set(x)) {
      throw std::invalid_argument("init sample outside the initial set");
    }
  }
  for (const auto& x : unsafe) {
    if (!spec.in_unsafe_set(x)) {
      throw std::invalid_argument("unsafe sample outside the unsafe set");
    }
  }
  for (const auto& x : flow) {
    if (!spec.in_state_box(x)) {
      throw std::invalid_argument("flow sample outside the state box");
    }
  }
}

namespace {

void latin_hypercube(const Box& box, int count, std::mt19937_64& rng,
                     std::vector<Vector>& out) {
  const int n = box.dim();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::vector<int>> strata(n, std::vector<int>(count));
  for (auto& s : strata) {
    std::iota(s.begin(), s.end(), 0);
    std::shuffle(s.begin(), s.end(), rng);
  }
  for (int i = 0; i < count; ++i) {
    Vector x(n);
    for (int d = 0; d < n; ++d) {
      const double t = (strata[d][i] + unit(rng)) / count;
      x[d] = box.lower[d] + t * (box.upper[d] - box.lower[d]);
    }
    out.push_back(std::move(x));
  }
}

void seed_box(const Box& box, int per_dim, SamplingScheme scheme,
              std::mt19937_64& rng, std::vector<Vector>& out) {
  if (scheme == SamplingScheme::kGrid) {
    for_each_grid_node(box, per_dim,
                       [&](const Vector& x) { out.push_back(x); });
    return;
  }
  const int count = static_cast<int>(std::pow(per_dim, box.dim()));
  latin_hypercube(box, count, rng, out);
}

}  // namespace

SampleSet initial_samples(const ProblemSpec& spec, int per_dim,
                          SamplingScheme scheme, std::uint64_t seed) {
  if (per_dim < 1) throw std::invalid_argument("initial_samples: per_dim < 1");
  std::mt19937_64 rng(seed);
  SampleSet s;
  for (const auto& b : spec.initial_boxes) seed_box(b, per_dim, scheme, rng, s.init);
  for (const auto& b : spec.unsafe_boxes) seed_box(b, per_dim, scheme, rng, s.unsafe);
  seed_box(spec.state_box, per_dim, scheme, rng, s.flow);
  return s;
}

double ConstraintSystem::violation(const std::vector<LinearRow>& rows,
                                   const Vector& a) {
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& r : rows) {
    const double norm = r.coefficients.norm();
    const double v = r.coefficients.dot(a) - r.rhs;
    worst = std::max(worst, norm > 0.0 ? v / norm : v);
  }
  return worst;
}

double ConstraintSystem::violation(const FlowBlock& block, const Vector& a) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& o : block.options) best = std::min(best, violation(o.rows, a));
  return best;
}

namespace {

double scaled_tol(const Vector& a, double tol) {
  return tol * std::max(1.0, a.size() ? a.cwiseAbs().maxCoeff() : 0.0);
}

std::size_t count_violated(const std::vector<LinearRow>& rows, const Vector& a,
                           double tol) {
  const double t = scaled_tol(a, tol);
  return static_cast<std::size_t>(std::count_if(
      rows.begin(), rows.end(), [&](const LinearRow& r) {
        return ConstraintSystem::violation({r}, a) > t;
      }));
}

}  // namespace

std::size_t ConstraintSystem::violated_init_rows(const Vector& a,
                                                 double tol) const {
  return count_violated(init_rows, a, tol);
}

std::size_t ConstraintSystem::violated_unsafe_rows(const Vector& a,
                                                   double tol) const {
  return count_violated(unsafe_rows, a, tol);
}

std::size_t ConstraintSystem::violated_flow_blocks(const Vector& a,
                                                   double tol) const {
  const double t = scaled_tol(a, tol);
  return static_cast<std::size_t>(
      std::count_if(flow_blocks.begin(), flow_blocks.end(),
                    [&](const FlowBlock& b) { return violation(b, a) > t; }));
}

bool ConstraintSystem::satisfied_by(const Vector& a, double tol) const {
  return violated_init_rows(a, tol) == 0 && violated_unsafe_rows(a, tol) == 0 &&
         violated_flow_blocks(a, tol) == 0;
}

ConstraintSystem encode_feasibility(const BarrierTemplate& tmpl,
                                    const SynthesisProblem& problem,
                                    const SampleSet& samples, double margin) {
  if (!(margin > 0.0)) throw std::invalid_argument("encode_feasibility: margin must be > 0");
  if (tmpl.dim() != problem.dim()) {
    throw std::invalid_argument("encode_feasibility: template dimension mismatch");
  }
  ConstraintSystem sys;
  sys.num_coefficients = tmpl.size();
  sys.margin = margin;
  for (const auto& x : samples.init) sys.init_rows.push_back({tmpl.evaluate(x), 0.0});
  for (const auto& x : samples.unsafe) {
    sys.unsafe_rows.push_back({-tmpl.evaluate(x), -margin});
  }

  const auto& inputs = problem.spec.inputs;
  const auto vertices = problem.error_box.vertices();
  std::vector<int> branch;
  if (problem.spec.m == 1 && !inputs.empty()) {
    int lo = 0;
    int hi = 0;
    for (int k = 1; k < static_cast<int>(inputs.size()); ++k) {
      if (inputs[k][0] < inputs[lo][0]) lo = k;
      if (inputs[k][0] > inputs[hi][0]) hi = k;
    }
    branch.push_back(lo);
    if (hi != lo) branch.push_back(hi);
  } else {
    branch.resize(inputs.size());
    std::iota(branch.begin(), branch.end(), 0);
  }

  for (const auto& x : samples.flow) {
    FlowBlock block;
    block.state = x;
    block.branch_options = branch;
    const Matrix grad = tmpl.gradient(x);
    const Vector mu = problem.drift->value(x);
    const Matrix g = problem.input_map(x);
    for (int k = 0; k < static_cast<int>(inputs.size()); ++k) {
      FlowOption opt;
      opt.input_index = k;
      const Vector base = mu + g * inputs[k];
      for (const auto& d : vertices) {
        Vector row = grad * (base + d);
        const bool seen = std::any_of(
            opt.rows.begin(), opt.rows.end(),
            [&](const LinearRow& r) { return r.coefficients == row; });
        if (!seen) opt.rows.push_back({std::move(row), 0.0});
      }
      block.options.push_back(std::move(opt));
    }
    sys.flow_blocks.push_back(std::move(block));
  }
  return sys;
}

NodeBudgetExceeded::NodeBudgetExceeded(std::size_t nodes)
    : std::runtime_error("branch-and-bound node budget exhausted after " +
                         std::to_string(nodes) + " nodes"),
      nodes_(nodes) {}

namespace {

struct NormalizedRow {
  Vector coefficients;
  double rhs = 0.0;
  bool trivial = false;     // zero row that holds
  bool impossible = false;  // zero row that cannot hold
};

NormalizedRow normalize(const LinearRow& r) {
  NormalizedRow n;
  const double norm = r.coefficients.norm();
  if (norm < 1e-300) {
    n.trivial = r.rhs >= 0.0;
    n.impossible = !n.trivial;
    return n;
  }
  n.coefficients = r.coefficients / norm;
  n.rhs = r.rhs / norm;
  return n;
}

class BranchAndBound {
 public:
  BranchAndBound(const ConstraintSystem& sys, const BarrierTemplate& tmpl,
                 const SolverOptions& opts)
      : sys_(sys), p_(sys.num_coefficients), a_max_(tmpl.coefficient_bound()),
        opts_(opts) {
    for (const auto& r : sys.init_rows) fixed_.push_back(normalize(r));
    for (const auto& r : sys.unsafe_rows) fixed_.push_back(normalize(r));
    for (const auto& b : sys.flow_blocks) {
      std::vector<std::vector<NormalizedRow>> opts_rows;
      for (const auto& o : b.options) {
        std::vector<NormalizedRow> rows;
        for (const auto& r : o.rows) rows.push_back(normalize(r));
        opts_rows.push_back(std::move(rows));
      }
      blocks_.push_back(std::move(opts_rows));
    }
  }

  CandidateSolution run() {
    CandidateSolution out;
    using Path = std::vector<std::pair<int, int>>;
    std::vector<Path> stack{Path{}};
    while (!stack.empty()) {
      if (nodes_ >= opts_.node_budget) throw NodeBudgetExceeded(nodes_);
      Path path = std::move(stack.back());
      stack.pop_back();
      ++nodes_;
      std::optional<Vector> a = solve_node(path);
      if (!a) continue;

      std::vector<int> assigned(blocks_.size(), -1);
      for (const auto& [blk, opt] : path) assigned[blk] = opt;
      const double tol = scaled_tol(*a, 1e-9);
      int worst_block = -1;
      double worst = tol;
      for (std::size_t b = 0; b < blocks_.size(); ++b) {
        if (assigned[b] >= 0) continue;
        const double v = ConstraintSystem::violation(sys_.flow_blocks[b], *a);
        if (v > worst) {
          worst = v;
          worst_block = static_cast<int>(b);
        }
      }
      if (worst_block < 0) {
        out.feasible = true;
        out.chosen_options = choose(assigned, *a);
        out.candidate = BarrierCandidate{BarrierTemplate(), *a};
        out.nodes = nodes_;
        return out;
      }
      // Children ordered so the option closest to feasible is explored first.
      const FlowBlock& block = sys_.flow_blocks[worst_block];
      std::vector<std::pair<double, int>> order;
      for (int o : block.branch_options) {
        order.emplace_back(ConstraintSystem::violation(block.options[o].rows, *a), o);
      }
      std::sort(order.begin(), order.end());
      for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Path child = path;
        child.emplace_back(worst_block, it->second);
        stack.push_back(std::move(child));
      }
    }
    out.nodes = nodes_;
    return out;
  }

 private:
  std::vector<int> choose(const std::vector<int>& assigned, const Vector& a) const {
    std::vector<int> chosen(assigned);
    for (std::size_t b = 0; b < chosen.size(); ++b) {
      if (chosen[b] >= 0) continue;
      const auto& opts = sys_.flow_blocks[b].options;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t o = 0; o < opts.size(); ++o) {
        const double v = ConstraintSystem::violation(opts[o].rows, a);
        if (v < best) {
          best = v;
          chosen[b] = static_cast<int>(o);
        }
      }
    }
    return chosen;
  }

  // max t  s.t.  row.a + t <= rhs for every active normalized row.
  std::optional<Vector> solve_node(const std::vector<std::pair<int, int>>& path) const {
    std::vector<const NormalizedRow*> rows;
    for (const auto& r : fixed_) rows.push_back(&r);
    for (const auto& [blk, opt] : path) {
      for (const auto& r : blocks_[blk][opt]) rows.push_back(&r);
    }
    double rhs_max = 0.0;
    std::vector<const NormalizedRow*> active;
    for (const auto* r : rows) {
      if (r->impossible) return std::nullopt;
      if (r->trivial) continue;
      active.push_back(r);
      rhs_max = std::max(rhs_max, std::abs(r->rhs));
    }
    const double t_bound = std::sqrt(static_cast<double>(p_)) * a_max_ + rhs_max + 1.0;

    LinearProgram lp;
    lp.objective = Vector::Zero(p_ + 1);
    lp.objective[p_] = 1.0;
    lp.constraints.resize(static_cast<Eigen::Index>(active.size()), p_ + 1);
    lp.rhs.resize(static_cast<Eigen::Index>(active.size()));
    for (std::size_t i = 0; i < active.size(); ++i) {
      lp.constraints.row(i).head(p_) = active[i]->coefficients.transpose();
      lp.constraints(i, p_) = 1.0;
      lp.rhs[i] = active[i]->rhs;
    }
    lp.lower = Vector::Constant(p_ + 1, -a_max_);
    lp.upper = Vector::Constant(p_ + 1, a_max_);
    lp.lower[p_] = -t_bound;
    lp.upper[p_] = t_bound;

    const LpSolution sol = solve_linear_program(lp);
    if (sol.status == LpStatus::kIterationLimit) {
      throw std::runtime_error("solve_candidate: LP iteration limit reached");
    }
    if (sol.status != LpStatus::kOptimal) return std::nullopt;
    if (sol.x[p_] < -1e-9 * std::max(1.0, a_max_)) return std::nullopt;
    return Vector(sol.x.head(p_));
  }

  const ConstraintSystem& sys_;
  int p_;
  double a_max_;
  SolverOptions opts_;
  std::vector<NormalizedRow> fixed_;
  std::vector<std::vector<std::vector<NormalizedRow>>> blocks_;
  std::size_t nodes_ = 0;
};

}  // namespace

CandidateSolution solve_candidate(const ConstraintSystem& system,
                                  const BarrierTemplate& tmpl,
                                  const SolverOptions& options) {
  if (system.num_coefficients != tmpl.size()) {
    throw std::invalid_argument("solve_candidate: template size mismatch");
  }
  BranchAndBound bnb(system, tmpl, options);
  CandidateSolution sol = bnb.run();
  if (!sol.feasible) return sol;

  Vector a = sol.candidate->coefficients;
  // All rows are positively homogeneous in a except the unsafe margin, so a
  // solution can be shrunk until the tightest unsafe row is active.
  if (!system.unsafe_rows.empty()) {
    double least = std::numeric_limits<double>::infinity();
    for (const auto& r : system.unsafe_rows) least = std::min(least, -r.coefficients.dot(a));
    if (least > system.margin) a *= system.margin / least;
  } else {
    const double mag = a.size() ? a.cwiseAbs().maxCoeff() : 0.0;
    if (mag > 1.0) a /= mag;
  }
  sol.candidate = BarrierCandidate{tmpl, a};
  return sol;
}

std::string to_string(SynthesisOutcome o) {
  switch (o) {
    case SynthesisOutcome::kCertified: return "certified";
    case SynthesisOutcome::kInfeasibleTemplate: return "infeasible-template";
    case SynthesisOutcome::kBudgetExhausted: return "budget-exhausted";
  }
  return "budget-exhausted";
}

SynthesisResult cegis(const BarrierTemplate& tmpl,
                      const SynthesisProblem& problem,
                      const CegisConfig& config) {
  if (config.validate_problem) problem.spec.validate();
  if (!problem.drift || !problem.input_map) {
    throw std::invalid_argument("cegis: drift model and input map are required");
  }
  if (config.max_iterations < 1) throw std::invalid_argument("cegis: max_iterations < 1");

  SynthesisResult result;
  result.samples = initial_samples(problem.spec, config.initial_per_dim,
                                   config.sampling, config.seed);
  if (result.samples.init.empty() || result.samples.unsafe.empty() ||
      result.samples.flow.empty()) {
    throw std::invalid_argument("cegis: every sample role must be non-empty");
  }
  const std::size_t per_iter = std::max<std::size_t>(1, config.samples_per_iteration);

  for (int it = 1; it <= config.max_iterations; ++it) {
    result.iterations = it;
    IterationRecord rec;
    rec.iteration = it;
    rec.samples = result.samples.size();

    const ConstraintSystem sys =
        encode_feasibility(tmpl, problem, result.samples, config.margin);
    CandidateSolution sol;
    try {
      sol = solve_candidate(sys, tmpl, config.solver);
    } catch (const NodeBudgetExceeded& e) {
      rec.solver_nodes = e.nodes();
      result.trace.push_back(std::move(rec));
      result.outcome = SynthesisOutcome::kBudgetExhausted;
      return result;
    }
    rec.solver_nodes = sol.nodes;
    if (!sol.feasible) {
      result.trace.push_back(std::move(rec));
      result.outcome = SynthesisOutcome::kInfeasibleTemplate;
      return result;
    }
    result.candidate = sol.candidate;

    VerificationResult vr =
        verify_candidate(*sol.candidate, problem, config.margin, config.verifier);
    rec.status = vr.status;
    if (vr.status == VerificationStatus::kCertified) {
      result.certificate = vr.certificate;
      result.trace.push_back(std::move(rec));
      result.outcome = SynthesisOutcome::kCertified;
      return result;
    }

    if (vr.status == VerificationStatus::kCounterexample) {
      for (const auto& cex : vr.counterexamples) {
        if (rec.added.size() == per_iter) break;
        if (result.samples.contains(cex.violated_condition, cex.state)) {
          throw std::logic_error(
              "cegis: verifier returned an existing " +
              to_string(cex.violated_condition) +
              " sample as counterexample; solver and verifier disagree");
        }
        result.samples.of(cex.violated_condition).push_back(cex.state);
        rec.added.push_back(cex);
      }
    } else {
      // Inconclusive: sharpen the sample set where the verifier could not
      // decide instead of stopping.
      for (const auto& open : vr.unresolved) {
        if (rec.added.size() == per_iter) break;
        if (result.samples.contains(open.violated_condition, open.state)) continue;
        result.samples.of(open.violated_condition).push_back(open.state);
        rec.added.push_back(open);
      }
    }
    const bool grew = !rec.added.empty();
    result.trace.push_back(std::move(rec));
    if (!grew) break;
  }
  result.outcome = SynthesisOutcome::kBudgetExhausted;
  return result;
}

KnownDynamicsReport check_conditions_known_dynamics(
    const BarrierCandidate& b, const ControlAffineSystem& sys,
    const ProblemSpec& spec, int grid_per_dim,
    const std::function<bool(const Vector&)>& flow_filter) {
  KnownDynamicsReport rep;
  auto record = [](ConditionCheck& c, double v, bool violated, const Vector& x) {
    ++c.points;
    if (c.points == 1 || v > c.worst) {
      c.worst = v;
      c.worst_state = x;
    }
    if (violated) ++c.violations;
  };
  for (const auto& box : spec.initial_boxes) {
    for_each_grid_node(box, grid_per_dim, [&](const Vector& x) {
      const double v = b.value(x);
      record(rep.init, v, v > 0.0, x);
    });
  }
  for (const auto& box : spec.unsafe_boxes) {
    for_each_grid_node(box, grid_per_dim, [&](const Vector& x) {
      const double v = -b.value(x);
      record(rep.unsafe, v, v >= 0.0, x);
    });
  }
  for_each_grid_node(spec.state_box, grid_per_dim, [&](const Vector& x) {
    if (flow_filter && !flow_filter(x)) return;
    const Vector grad = b.gradient(x);
    const Vector f = sys.drift(x);
    const Matrix g = sys.input_map(x);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& u : spec.inputs) best = std::min(best, grad.dot(f + g * u));
    record(rep.flow, best, best > 0.0, x);
  });
  return rep;
}

}  // namespace gpcbf
