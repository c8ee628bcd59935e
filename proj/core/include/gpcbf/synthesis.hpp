#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gpcbf/barrier.hpp"
#include "gpcbf/confidence.hpp"
#include "gpcbf/drift_model.hpp"
#include "gpcbf/dynamics.hpp"

namespace gpcbf {

/// Everything the barrier conditions depend on: regions and inputs, the
/// drift estimate mu, the input map g and the model-error box D.
struct SynthesisProblem {
  ProblemSpec spec;
  std::shared_ptr<const DriftModel> drift;
  std::function<Matrix(const Vector&)> input_map;
  double input_map_lipschitz = 0.0;
  ConfidenceBox error_box;

  int dim() const { return spec.n; }
};

/// Synthesis problem for a known control-affine system with the given drift
/// estimate and error box.
SynthesisProblem make_synthesis_problem(const ProblemSpec& spec,
                                        const ControlAffineSystem& sys,
                                        std::shared_ptr<const DriftModel> drift,
                                        ConfidenceBox error_box);

enum class Condition { kInit, kUnsafe, kFlow };

std::string to_string(Condition c);
Condition condition_from_string(const std::string& s);

struct SampleSet {
  std::vector<Vector> init;
  std::vector<Vector> unsafe;
  std::vector<Vector> flow;

  std::size_t size() const { return init.size() + unsafe.size() + flow.size(); }
  const std::vector<Vector>& of(Condition c) const;
  std::vector<Vector>& of(Condition c);
  bool contains(Condition c, const Vector& x) const;
  /// Throws std::invalid_argument when a point lies outside its region.
  void validate(const ProblemSpec& spec) const;
};

enum class SamplingScheme { kGrid, kLatinHypercube };

/// Seeds the sample set: per_dim^n points in every initial box, every unsafe
/// box and the state box. Latin hypercube draws the same number of points
/// per box from `seed`.
SampleSet initial_samples(const ProblemSpec& spec, int per_dim = 5,
                          SamplingScheme scheme = SamplingScheme::kGrid,
                          std::uint64_t seed = 0);

struct Counterexample {
  Vector state;
  Condition violated_condition = Condition::kFlow;
  double violation_margin = 0.0;
};

/// coefficients . a <= rhs
struct LinearRow {
  Vector coefficients;
  double rhs = 0.0;
};

/// One input choice at a flow sample: all error-box vertex rows must hold.
struct FlowOption {
  int input_index = 0;
  std::vector<LinearRow> rows;
};

/// Disjunction over the inputs at one flow sample.
struct FlowBlock {
  Vector state;
  std::vector<FlowOption> options;
  // Options the branch-and-bound explores. Rows are affine in u, so a
  // feasible a for some input is feasible for an extreme input of conv(U)
  // whenever m = 1; for m > 1 every option is kept.
  std::vector<int> branch_options;
};

/// Sample-wise encoding of the barrier conditions, linear in a:
///   b(x).a <= 0 at init samples, b(x).a >= margin at unsafe samples, and at
///   each flow sample OR_u AND_vertices (db/dx (mu + d + g u)).a <= 0.
struct ConstraintSystem {
  int num_coefficients = 0;
  double margin = 1.0;
  std::vector<LinearRow> init_rows;
  std::vector<LinearRow> unsafe_rows;
  std::vector<FlowBlock> flow_blocks;

  /// Largest normalized violation of a row set, (row.a - rhs) / |row|.
  static double violation(const std::vector<LinearRow>& rows, const Vector& a);
  /// min over options of the option's violation.
  static double violation(const FlowBlock& block, const Vector& a);

  std::size_t violated_init_rows(const Vector& a, double tol = 1e-9) const;
  std::size_t violated_unsafe_rows(const Vector& a, double tol = 1e-9) const;
  std::size_t violated_flow_blocks(const Vector& a, double tol = 1e-9) const;
  bool satisfied_by(const Vector& a, double tol = 1e-9) const;
};

ConstraintSystem encode_feasibility(const BarrierTemplate& tmpl,
                                    const SynthesisProblem& problem,
                                    const SampleSet& samples, double margin);

struct SolverOptions {
  std::size_t node_budget = 200000;
};

class NodeBudgetExceeded : public std::runtime_error {
 public:
  explicit NodeBudgetExceeded(std::size_t nodes);
  std::size_t nodes() const { return nodes_; }

 private:
  std::size_t nodes_;
};

struct CandidateSolution {
  bool feasible = false;
  std::optional<BarrierCandidate> candidate;
  // Option index per flow block (into FlowBlock::options).
  std::vector<int> chosen_options;
  std::size_t nodes = 0;
};

/// Depth-first branch-and-bound over the flow-sample input choices with an
/// LP at each node maximizing the smallest normalized row slack. Returns an
/// infeasible solution only after the whole tree is exhausted; throws
/// NodeBudgetExceeded when the budget runs out first.
CandidateSolution solve_candidate(const ConstraintSystem& system,
                                  const BarrierTemplate& tmpl,
                                  const SolverOptions& options = {});

struct VerifierConfig {
  int resolution = 40;      // top-level cells per dimension and region
  int max_depth = 8;        // bisection levels below the top grid
  std::size_t max_cells = 20'000'000;
  std::size_t max_counterexamples = 16;
  double tolerance = 1e-9;  // relative to the coefficient scale
  int threads = 0;          // 0: default_thread_count()
};

/// Largest rigorous margin (cell upper bound minus center value) the
/// verifier used per condition.
struct LipschitzMargins {
  double init = 0.0;
  double unsafe = 0.0;
  double flow = 0.0;
};

struct Certificate {
  int resolution = 0;
  int max_depth = 0;
  int deepest_level = 0;
  std::size_t cells = 0;
  LipschitzMargins lipschitz_margins;
  // Extremal certified bounds: sup B over X0, inf B over X1 and
  // sup of min_u max_vertex dB/dx (mu + d + g u) over X.
  double init_upper = 0.0;
  double unsafe_lower = 0.0;
  double flow_upper = 0.0;
  std::string verifier_mode = "lipschitz-adaptive-grid";
};

enum class VerificationStatus { kCertified, kCounterexample, kInconclusive };

std::string to_string(VerificationStatus s);

struct VerificationResult {
  VerificationStatus status = VerificationStatus::kInconclusive;
  std::optional<Certificate> certificate;
  // Worst first, ties by lexicographic state.
  std::vector<Counterexample> counterexamples;
  // Centers of cells left open at maximal depth or when the cell budget ran
  // out, worst first.
  std::vector<Counterexample> unresolved;
  std::size_t cells = 0;
};

/// Violation of one condition at x (positive means violated):
///   init: B(x); unsafe: margin/2 - B(x);
///   flow: min_u max_vertex dB/dx (mu + d + g u).
double condition_value(const BarrierCandidate& b,
                       const SynthesisProblem& problem, double margin,
                       Condition c, const Vector& x);

/// Searches X0 for B > 0, X1 for B <= margin/2 and X for a positive flow
/// value on an adaptive grid with rigorous per-cell bounds.
VerificationResult verify_candidate(const BarrierCandidate& candidate,
                                    const SynthesisProblem& problem,
                                    double margin,
                                    const VerifierConfig& config = {});

struct CegisConfig {
  double margin = 1.0;
  int max_iterations = 50;
  int initial_per_dim = 5;
  SamplingScheme sampling = SamplingScheme::kGrid;
  std::uint64_t seed = 0;
  // Counterexamples (or open cells) fed back per iteration.
  std::size_t samples_per_iteration = 1;
  bool validate_problem = true;
  SolverOptions solver;
  VerifierConfig verifier;
};

enum class SynthesisOutcome { kCertified, kInfeasibleTemplate, kBudgetExhausted };

std::string to_string(SynthesisOutcome o);

struct IterationRecord {
  int iteration = 0;
  std::size_t samples = 0;  // before the new points were added
  std::size_t solver_nodes = 0;
  VerificationStatus status = VerificationStatus::kInconclusive;
  std::vector<Counterexample> added;
};

struct SynthesisResult {
  SynthesisOutcome outcome = SynthesisOutcome::kBudgetExhausted;
  std::optional<BarrierCandidate> candidate;  // last candidate, if any
  std::optional<Certificate> certificate;
  int iterations = 0;
  std::vector<IterationRecord> trace;
  SampleSet samples;
};

/// Alternates solve_candidate and verify_candidate, adding the worst
/// counterexamples to their role until certification, template
/// infeasibility or the iteration budget.
SynthesisResult cegis(const BarrierTemplate& tmpl,
                      const SynthesisProblem& problem,
                      const CegisConfig& config = {});

struct ConditionCheck {
  std::size_t points = 0;
  std::size_t violations = 0;
  double worst = 0.0;  // largest violation value seen (<= 0 when none)
  std::optional<Vector> worst_state;
};

struct KnownDynamicsReport {
  ConditionCheck init;
  ConditionCheck unsafe;
  ConditionCheck flow;

  bool holds() const {
    return init.violations == 0 && unsafe.violations == 0 &&
           flow.violations == 0;
  }
};

/// Evaluates B <= 0 on X0, B > 0 on X1 and min_u dB/dx (f + g u) <= 0 on X
/// with the true drift, at the nodes of a grid_per_dim^n grid per box.
/// `flow_filter`, when set, restricts the flow check to points it accepts.
KnownDynamicsReport check_conditions_known_dynamics(
    const BarrierCandidate& b, const ControlAffineSystem& sys,
    const ProblemSpec& spec, int grid_per_dim,
    const std::function<bool(const Vector&)>& flow_filter = {});

}  // namespace gpcbf
