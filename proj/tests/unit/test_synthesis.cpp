#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <random>

#include "gpcbf/barrier.hpp"
#include "gpcbf/drift_model.hpp"
#include "gpcbf/grid.hpp"
#include "gpcbf/linear_program.hpp"
#include "gpcbf/synthesis.hpp"

namespace gpcbf {
namespace {

Vector v1(double a) { return Vector::Constant(1, a); }
Vector v2(double a, double b) { return (Vector(2) << a, b).finished(); }

// ---------------------------------------------------------------------------
// basis

TEST(Basis, DegreeTwoInTwoVariables) {
  const BarrierTemplate t(2, 2);
  ASSERT_EQ(t.size(), 6);
  const std::vector<std::string> names = {"1", "x1", "x2", "x1^2", "x1*x2", "x2^2"};
  for (int i = 0; i < 6; ++i) EXPECT_EQ(t.monomial_name(i), names[i]);
  EXPECT_EQ(BarrierTemplate(3, 3).size(), 20);
  EXPECT_EQ(BarrierTemplate(2, 0).size(), 1);
}

TEST(Basis, ProductGradient) {
  const BarrierTemplate t(2, 2);
  const int i = t.index_of({1, 1});
  ASSERT_GE(i, 0);
  const Matrix g = t.gradient(v2(2, 3));
  EXPECT_EQ(g(i, 0), 3.0);
  EXPECT_EQ(g(i, 1), 2.0);
}

TEST(Basis, GradientAndHessianMatchFiniteDifferences) {
  const BarrierTemplate t(3, 3);
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int rep = 0; rep < 20; ++rep) {
    const Vector x = (Vector(3) << u(rng), u(rng), u(rng)).finished();
    const Matrix g = t.gradient(x);
    const auto h = t.hessian(x);
    for (int d = 0; d < 3; ++d) {
      Vector xp = x, xm = x;
      const double step = 1e-5;
      xp[d] += step;
      xm[d] -= step;
      const Vector fd = (t.evaluate(xp) - t.evaluate(xm)) / (2 * step);
      const Matrix gfd = (t.gradient(xp) - t.gradient(xm)) / (2 * step);
      for (int i = 0; i < t.size(); ++i) {
        EXPECT_NEAR(g(i, d), fd[i], 1e-6 * std::max(1.0, std::abs(fd[i])));
        for (int e = 0; e < 3; ++e) {
          EXPECT_NEAR(h[i](e, d), gfd(i, e), 1e-6 * std::max(1.0, std::abs(gfd(i, e))));
        }
      }
    }
  }
}

TEST(Basis, IntervalHessianEnclosesPointHessians) {
  const BarrierTemplate t(2, 3);
  const IntervalVector box = {Interval(-0.5, 1.5), Interval(-2.0, -1.0)};
  const auto enc = t.hessian(box);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> a(-0.5, 1.5), b(-2.0, -1.0);
  for (int rep = 0; rep < 200; ++rep) {
    const auto h = t.hessian(v2(a(rng), b(rng)));
    for (int i = 0; i < t.size(); ++i) {
      for (int d = 0; d < 2; ++d) {
        for (int e = 0; e < 2; ++e) EXPECT_TRUE(enc[i][d * 2 + e].contains(h[i](d, e)));
      }
    }
  }
}

TEST(Basis, PublishedJetEngineBarrierCoefficients) {
  const auto b = reference_jet_engine_barrier();
  const auto& t = b.basis;
  EXPECT_DOUBLE_EQ(b.coefficients[t.index_of({0, 0})], -4292.8910);
  EXPECT_DOUBLE_EQ(b.coefficients[t.index_of({1, 0})], 1129.2414);
  EXPECT_DOUBLE_EQ(b.coefficients[t.index_of({0, 1})], 1010.3266);
  EXPECT_DOUBLE_EQ(b.coefficients[t.index_of({2, 0})], 1274.3322);
  EXPECT_DOUBLE_EQ(b.coefficients[t.index_of({0, 2})], 1564.8195);
  EXPECT_DOUBLE_EQ(b.coefficients[t.index_of({1, 1})], -1368.6064);
  const double x1 = 0.4, x2 = -0.7;
  EXPECT_NEAR(b.value(v2(x1, x2)),
              -4292.8910 + 1129.2414 * x1 + 1010.3266 * x2 + 1274.3322 * x1 * x1 +
                  1564.8195 * x2 * x2 - 1368.6064 * x1 * x2,
              1e-9);
}

// ---------------------------------------------------------------------------
// linear programming

TEST(LinearProgramTest, SmallLpMatchesVertexEnumeration) {
  // max x + 2y s.t. x + y <= 4, x - y <= 1, -x + 3y <= 6, 0 <= x, y <= 5.
  LinearProgram lp;
  lp.objective = v2(1, 2);
  lp.constraints.resize(3, 2);
  lp.constraints << 1, 1, 1, -1, -1, 3;
  lp.rhs = (Vector(3) << 4, 1, 6).finished();
  lp.lower = v2(0, 0);
  lp.upper = v2(5, 5);
  const auto sol = solve_linear_program(lp);
  ASSERT_EQ(sol.status, LpStatus::kOptimal);
  // Optimum at the intersection of x + y = 4 and -x + 3y = 6: (1.5, 2.5).
  EXPECT_NEAR(sol.x[0], 1.5, 1e-9);
  EXPECT_NEAR(sol.x[1], 2.5, 1e-9);
  EXPECT_NEAR(sol.objective, 6.5, 1e-9);
}

TEST(LinearProgramTest, DetectsInfeasibility) {
  LinearProgram lp;
  lp.objective = v1(1);
  lp.constraints.resize(2, 1);
  lp.constraints << 1, -1;
  lp.rhs = v2(-1, -1);  // x <= -1 and x >= 1
  lp.lower = v1(-10);
  lp.upper = v1(10);
  EXPECT_EQ(solve_linear_program(lp).status, LpStatus::kInfeasible);
}

TEST(LinearProgramTest, RandomLpsAgreeWithGridSearch) {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> z(0, 1);
  for (int rep = 0; rep < 30; ++rep) {
    LinearProgram lp;
    lp.objective = v2(z(rng), z(rng));
    lp.constraints.resize(6, 2);
    lp.rhs.resize(6);
    for (int r = 0; r < 6; ++r) {
      lp.constraints(r, 0) = z(rng);
      lp.constraints(r, 1) = z(rng);
      lp.rhs[r] = std::abs(z(rng)) + 0.1;  // origin stays feasible
    }
    lp.lower = v2(-1, -1);
    lp.upper = v2(1, 1);
    const auto sol = solve_linear_program(lp);
    ASSERT_EQ(sol.status, LpStatus::kOptimal);
    EXPECT_LE(sol.max_violation, 1e-9);
    double best = -INFINITY;
    for (int i = 0; i <= 400; ++i) {
      for (int j = 0; j <= 400; ++j) {
        const Vector x = v2(-1 + i / 200.0, -1 + j / 200.0);
        if (((lp.constraints * x - lp.rhs).array() <= 0).all()) best = std::max(best, lp.objective.dot(x));
      }
    }
    EXPECT_GE(sol.objective, best - 1e-9);
    EXPECT_LE(sol.objective, best + 0.02 * lp.objective.lpNorm<1>());
  }
}

// ---------------------------------------------------------------------------
// problems

ProblemSpec toy_spec() {
  ProblemSpec s;
  s.n = 1;
  s.m = 1;
  s.state_box = Box(v1(-1), v1(1));
  s.initial_boxes = {Box(v1(-0.2), v1(0.2))};
  s.unsafe_boxes = {Box(v1(0.8), v1(1))};
  s.inputs = {v1(-1), v1(0), v1(1)};
  return s;
}

SynthesisProblem toy_problem() {
  ControlAffineSystem sys;
  sys.n = 1;
  sys.m = 1;
  sys.input_map = [](const Vector&) { return Matrix::Identity(1, 1); };
  return make_synthesis_problem(toy_spec(), sys, zero_drift(1), uniform_confidence_box(1, 0.0));
}

SynthesisProblem jet_problem_with_true_drift(double half_width) {
  const auto spec = jet_engine_problem();
  return make_synthesis_problem(spec, jet_engine_system(), jet_engine_drift(spec.state_box),
                                uniform_confidence_box(2, half_width));
}

// ---------------------------------------------------------------------------
// encoding

TEST(Encoding, FourVertexRowsPerOptionInTwoDimensions) {
  const auto prob = jet_problem_with_true_drift(0.05);
  SampleSet s;
  s.flow = {v2(0.5, 0.5), v2(2, -3)};
  const auto sys = encode_feasibility(BarrierTemplate(2, 2), prob, s, 1.0);
  ASSERT_EQ(sys.flow_blocks.size(), 2u);
  for (const auto& blk : sys.flow_blocks) {
    ASSERT_EQ(blk.options.size(), 9u);
    for (const auto& opt : blk.options) EXPECT_EQ(opt.rows.size(), 4u);
  }
}

TEST(Encoding, DegenerateBoxCollapsesToOneRow) {
  const auto prob = jet_problem_with_true_drift(0.0);
  SampleSet s;
  s.flow = {v2(0.5, 0.5)};
  const auto sys = encode_feasibility(BarrierTemplate(2, 2), prob, s, 1.0);
  for (const auto& opt : sys.flow_blocks[0].options) EXPECT_EQ(opt.rows.size(), 1u);
}

TEST(Encoding, PublishedBarrierRowViolationsMatchDirectEvaluation) {
  const auto prob = jet_problem_with_true_drift(0.05);
  const auto ref = reference_jet_engine_barrier();
  SampleSet s;
  std::size_t init_bad = 0, unsafe_bad = 0;
  for (const auto& b : prob.spec.initial_boxes) {
    for_each_grid_node(b, 20, [&](const Vector& x) {
      s.init.push_back(x);
      init_bad += ref.value(x) > 0 ? 1 : 0;
    });
  }
  for (const auto& b : prob.spec.unsafe_boxes) {
    for_each_grid_node(b, 20, [&](const Vector& x) {
      s.unsafe.push_back(x);
      unsafe_bad += ref.value(x) < 1.0 ? 1 : 0;
    });
  }
  const auto sys = encode_feasibility(ref.basis, prob, s, 1.0);
  EXPECT_EQ(sys.violated_init_rows(ref.coefficients), init_bad);
  EXPECT_EQ(sys.violated_unsafe_rows(ref.coefficients), unsafe_bad);
}

TEST(Encoding, RowsReproduceConditionsAtSamples) {
  const auto prob = jet_problem_with_true_drift(0.05);
  const BarrierTemplate t(2, 2);
  std::mt19937_64 rng(21);
  std::normal_distribution<double> z(0, 1);
  SampleSet s;
  s.init = {v2(0.5, 0.2)};
  s.unsafe = {v2(1, 3)};
  s.flow = {v2(0.3, -1.7)};
  const auto sys = encode_feasibility(t, prob, s, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    BarrierCandidate b{t, Vector(6)};
    for (int i = 0; i < 6; ++i) b.coefficients[i] = z(rng);
    EXPECT_NEAR(sys.init_rows[0].coefficients.dot(b.coefficients), b.value(s.init[0]), 1e-12);
    EXPECT_NEAR(-sys.unsafe_rows[0].coefficients.dot(b.coefficients), b.value(s.unsafe[0]), 1e-12);
    // Block violation sign agrees with the direct min-max flow value.
    const double direct = condition_value(b, prob, 1.0, Condition::kFlow, s.flow[0]);
    const double block = ConstraintSystem::violation(sys.flow_blocks[0], b.coefficients);
    EXPECT_EQ(direct > 1e-12, block > 1e-12);
  }
}

// ---------------------------------------------------------------------------
// candidate solving

TEST(Solve, InitOnlyIsFeasible) {
  const auto prob = toy_problem();
  SampleSet s;
  s.init = {v1(0.1)};
  const BarrierTemplate t(1, 1);
  const auto sys = encode_feasibility(t, prob, s, 1.0);
  const auto sol = solve_candidate(sys, t);
  ASSERT_TRUE(sol.feasible);
  EXPECT_LE(sol.candidate->value(v1(0.1)), 1e-12);
}

TEST(Solve, UnsafeOnlyReachesMargin) {
  const auto prob = toy_problem();
  SampleSet s;
  s.unsafe = {v1(0.9)};
  const BarrierTemplate t(1, 1);
  const auto sol = solve_candidate(encode_feasibility(t, prob, s, 1.0), t);
  ASSERT_TRUE(sol.feasible);
  EXPECT_GE(sol.candidate->value(v1(0.9)), 1.0 - 1e-9);
}

TEST(Solve, ToyLinearRowsHold) {
  const auto prob = toy_problem();
  SampleSet s;
  s.init = {v1(-0.2), v1(0.2)};
  s.unsafe = {v1(0.9)};
  const BarrierTemplate t(1, 1);
  const auto sol = solve_candidate(encode_feasibility(t, prob, s, 1.0), t);
  ASSERT_TRUE(sol.feasible);
  const double a0 = sol.candidate->coefficients[0], a1 = sol.candidate->coefficients[1];
  EXPECT_GE(a0 + 0.9 * a1, 1.0 - 1e-9);
  EXPECT_LE(a0 - 0.2 * a1, 1e-9);
  EXPECT_LE(a0 + 0.2 * a1, 1e-9);
  EXPECT_LE(std::abs(a0), t.coefficient_bound());
  EXPECT_LE(std::abs(a1), t.coefficient_bound());
}

TEST(Solve, ToyFeasibleRegionAgreesWithBruteForce) {
  // Brute force over a coefficient grid: the rows are feasible iff some
  // (a0, a1) on a fine grid satisfies them.
  const auto prob = toy_problem();
  const BarrierTemplate t(1, 1);
  for (double x_unsafe : {0.8, 0.9, 1.0}) {
    SampleSet s;
    s.init = {v1(-0.2), v1(0.2)};
    s.unsafe = {v1(x_unsafe)};
    const auto sol = solve_candidate(encode_feasibility(t, prob, s, 1.0), t);
    bool brute = false;
    for (int i = -200; i <= 200 && !brute; ++i) {
      for (int j = -200; j <= 200 && !brute; ++j) {
        const double a0 = i * 0.05, a1 = j * 0.05;
        brute = a0 + x_unsafe * a1 >= 1.0 && a0 - 0.2 * a1 <= 0 && a0 + 0.2 * a1 <= 0;
      }
    }
    EXPECT_EQ(sol.feasible, brute);
  }
}

TEST(Solve, ContradictoryRowsAreInfeasible) {
  const auto prob = toy_problem();
  SampleSet s;
  s.init = {v1(0.1)};
  s.unsafe = {v1(0.1)};
  const BarrierTemplate t(1, 1);
  const auto sol = solve_candidate(encode_feasibility(t, prob, s, 1.0), t);
  EXPECT_FALSE(sol.feasible);
  EXPECT_FALSE(sol.candidate.has_value());
}

TEST(Solve, ConstantTemplateCannotSeparate) {
  const auto prob = jet_problem_with_true_drift(0.05);
  const BarrierTemplate t(2, 0);
  const auto s = initial_samples(prob.spec, 3);
  EXPECT_FALSE(solve_candidate(encode_feasibility(t, prob, s, 1.0), t).feasible);
}

TEST(Solve, NodeBudgetIsADistinctError) {
  const auto prob = jet_problem_with_true_drift(0.05);
  const BarrierTemplate t(2, 2);
  const auto s = initial_samples(prob.spec, 5);
  SolverOptions opt;
  opt.node_budget = 1;
  EXPECT_THROW(solve_candidate(encode_feasibility(t, prob, s, 1.0), t, opt), NodeBudgetExceeded);
}

TEST(Solve, SolutionSatisfiesEveryEncodedConstraint) {
  const auto prob = jet_problem_with_true_drift(0.05);
  const BarrierTemplate t(2, 2);
  const auto s = initial_samples(prob.spec, 5);
  const auto sys = encode_feasibility(t, prob, s, 1.0);
  const auto sol = solve_candidate(sys, t);
  ASSERT_TRUE(sol.feasible);
  EXPECT_TRUE(sys.satisfied_by(sol.candidate->coefficients));
  EXPECT_TRUE(sol.candidate->within_bound());
}

// ---------------------------------------------------------------------------
// verification

TEST(Verify, NegativeConstantFailsUnsafe) {
  const auto prob = jet_problem_with_true_drift(0.05);
  const BarrierCandidate b{BarrierTemplate(2, 0), v1(-1)};
  VerifierConfig cfg;
  cfg.resolution = 4;
  const auto res = verify_candidate(b, prob, 1.0, cfg);
  ASSERT_EQ(res.status, VerificationStatus::kCounterexample);
  bool unsafe = false;
  for (const auto& c : res.counterexamples) unsafe = unsafe || c.violated_condition == Condition::kUnsafe;
  EXPECT_TRUE(unsafe);
}

TEST(Verify, CounterexamplesReevaluateAsViolations) {
  const auto prob = jet_problem_with_true_drift(0.05);
  std::mt19937_64 rng(12);
  std::normal_distribution<double> z(0, 1);
  VerifierConfig cfg;
  cfg.resolution = 10;
  cfg.max_depth = 3;
  for (int rep = 0; rep < 5; ++rep) {
    BarrierCandidate b{BarrierTemplate(2, 2), Vector(6)};
    for (int i = 0; i < 6; ++i) b.coefficients[i] = z(rng);
    const auto res = verify_candidate(b, prob, 1.0, cfg);
    for (const auto& c : res.counterexamples) {
      const double v = condition_value(b, prob, 1.0, c.violated_condition, c.state);
      EXPECT_GE(v, c.violation_margin - 1e-9);
      EXPECT_GT(v, 0.0);
      switch (c.violated_condition) {
        case Condition::kInit: EXPECT_TRUE(prob.spec.in_initial_set(c.state)); break;
        case Condition::kUnsafe: EXPECT_TRUE(prob.spec.in_unsafe_set(c.state)); break;
        case Condition::kFlow: EXPECT_TRUE(prob.spec.in_state_box(c.state)); break;
      }
    }
    for (std::size_t i = 1; i < res.counterexamples.size(); ++i) {
      EXPECT_GE(res.counterexamples[i - 1].violation_margin, res.counterexamples[i].violation_margin);
    }
  }
}

TEST(Verify, VertexMaximumDominatesInteriorDisturbances) {
  const auto prob = jet_problem_with_true_drift(0.05);
  std::mt19937_64 rng(31);
  std::normal_distribution<double> z(0, 1);
  std::uniform_real_distribution<double> d(-0.05, 0.05), x1(-1, 3), x2(-4, 4);
  const auto vertices = prob.error_box.vertices();
  for (int rep = 0; rep < 10; ++rep) {
    BarrierCandidate b{BarrierTemplate(2, 2), Vector(6)};
    for (int i = 0; i < 6; ++i) b.coefficients[i] = z(rng);
    const Vector x = v2(x1(rng), x2(rng));
    const Vector grad = b.gradient(x);
    const Vector mu = prob.drift->value(x);
    for (const auto& u : prob.spec.inputs) {
      const Vector base = mu + prob.input_map(x) * u;
      double vmax = -INFINITY;
      for (const auto& v : vertices) vmax = std::max(vmax, grad.dot(base + v));
      for (int t = 0; t < 1000; ++t) {
        EXPECT_LE(grad.dot(base + v2(d(rng), d(rng))), vmax + 1e-12);
      }
    }
  }
}

TEST(Verify, CertifiesToyBarrier) {
  const auto prob = toy_problem();
  // B = 5x - 2: -3 <= B <= -1 on X0, 2 <= B <= 3 on X1, u = 0 always works.
  const BarrierCandidate b{BarrierTemplate(1, 1), v2(-2, 5)};
  const auto res = verify_candidate(b, prob, 1.0);
  ASSERT_EQ(res.status, VerificationStatus::kCertified);
  ASSERT_TRUE(res.certificate);
  EXPECT_LE(res.certificate->init_upper, -1.0 + 1e-9);
  EXPECT_GE(res.certificate->unsafe_lower, 1.5 - 1e-9);
}

TEST(Verify, ThreadCountDoesNotChangeResult) {
  const auto prob = jet_problem_with_true_drift(0.05);
  BarrierCandidate b{BarrierTemplate(2, 2), (Vector(6) << -1, 0.2, -0.3, 0.1, 0.2, 0.9).finished()};
  VerifierConfig a, c;
  a.resolution = c.resolution = 16;
  a.max_depth = c.max_depth = 4;
  a.threads = 1;
  c.threads = 3;
  const auto ra = verify_candidate(b, prob, 1.0, a);
  const auto rc = verify_candidate(b, prob, 1.0, c);
  EXPECT_EQ(ra.status, rc.status);
  EXPECT_EQ(ra.cells, rc.cells);
  ASSERT_EQ(ra.counterexamples.size(), rc.counterexamples.size());
  for (std::size_t i = 0; i < ra.counterexamples.size(); ++i) {
    EXPECT_EQ(ra.counterexamples[i].state, rc.counterexamples[i].state);
  }
}

// ---------------------------------------------------------------------------
// CEGIS

TEST(Cegis, ToyCertifiesAndPassesBruteForce) {
  const auto prob = toy_problem();
  const BarrierTemplate t(1, 1);
  const auto res = cegis(t, prob);
  ASSERT_EQ(res.outcome, SynthesisOutcome::kCertified);
  ASSERT_TRUE(res.candidate && res.certificate);
  const auto& b = *res.candidate;
  for (int i = 0; i < 1000; ++i) {
    const Vector x = v1(-1 + 2.0 * i / 999);
    if (prob.spec.in_initial_set(x)) EXPECT_LE(b.value(x), 0.0);
    if (prob.spec.in_unsafe_set(x)) EXPECT_GE(b.value(x), 1.0 - 1e-9);
    double best = INFINITY;
    for (const auto& u : prob.spec.inputs) best = std::min(best, b.gradient(x)[0] * u[0]);
    EXPECT_LE(best, 0.0);
  }
}

TEST(Cegis, OverlappingRegionsGiveInfeasibleTemplate) {
  auto spec = toy_spec();
  spec.unsafe_boxes = {Box(v1(0.1), v1(0.5))};
  ControlAffineSystem sys;
  sys.n = sys.m = 1;
  sys.input_map = [](const Vector&) { return Matrix::Identity(1, 1); };
  const auto prob = make_synthesis_problem(spec, sys, zero_drift(1), uniform_confidence_box(1, 0.0));
  CegisConfig cfg;
  cfg.validate_problem = false;
  const auto res = cegis(BarrierTemplate(1, 1), prob, cfg);
  EXPECT_EQ(res.outcome, SynthesisOutcome::kInfeasibleTemplate);
  EXPECT_EQ(res.iterations, 1);
}

TEST(Cegis, ValidationRejectsOverlappingRegions) {
  auto spec = toy_spec();
  spec.unsafe_boxes = {Box(v1(0.1), v1(0.5))};
  ControlAffineSystem sys;
  sys.n = sys.m = 1;
  sys.input_map = [](const Vector&) { return Matrix::Identity(1, 1); };
  const auto prob = make_synthesis_problem(spec, sys, zero_drift(1), uniform_confidence_box(1, 0.0));
  EXPECT_THROW(cegis(BarrierTemplate(1, 1), prob), std::invalid_argument);
}

class JetEngineCegis : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    problem_ = std::make_unique<SynthesisProblem>(jet_problem_with_true_drift(0.05));
    result_ = std::make_unique<SynthesisResult>(cegis(BarrierTemplate(2, 2), *problem_));
  }
  static void TearDownTestSuite() {
    result_.reset();
    problem_.reset();
  }
  static std::unique_ptr<SynthesisProblem> problem_;
  static std::unique_ptr<SynthesisResult> result_;
};
std::unique_ptr<SynthesisProblem> JetEngineCegis::problem_;
std::unique_ptr<SynthesisResult> JetEngineCegis::result_;

TEST_F(JetEngineCegis, CertifiesWithinFiftyIterations) {
  ASSERT_EQ(result_->outcome, SynthesisOutcome::kCertified);
  EXPECT_LE(result_->iterations, 50);
  ASSERT_FALSE(result_->trace.empty());
  EXPECT_EQ(result_->trace.back().status, VerificationStatus::kCertified);
}

TEST_F(JetEngineCegis, SatisfiesEveryAccumulatedSample) {
  ASSERT_TRUE(result_->candidate);
  const auto sys = encode_feasibility(result_->candidate->basis, *problem_, result_->samples, 1.0);
  EXPECT_TRUE(sys.satisfied_by(result_->candidate->coefficients));
}

TEST_F(JetEngineCegis, SampleSetGrowsStrictly) {
  for (std::size_t i = 1; i < result_->trace.size(); ++i) {
    EXPECT_GT(result_->trace[i].samples, result_->trace[i - 1].samples);
  }
}

TEST_F(JetEngineCegis, DenseGridConfirmsConditions) {
  ASSERT_TRUE(result_->candidate);
  const auto& b = *result_->candidate;
  std::size_t bad = 0;
  for_each_grid_node(problem_->spec.state_box, 400, [&](const Vector& x) {
    bad += condition_value(b, *problem_, 1.0, Condition::kFlow, x) > 0 ? 1 : 0;
  });
  for (const auto& box : problem_->spec.initial_boxes) {
    for_each_grid_node(box, 400, [&](const Vector& x) { bad += b.value(x) > 0 ? 1 : 0; });
  }
  for (const auto& box : problem_->spec.unsafe_boxes) {
    for_each_grid_node(box, 400, [&](const Vector& x) { bad += b.value(x) <= 0.5 ? 1 : 0; });
  }
  EXPECT_EQ(bad, 0u);
}

TEST_F(JetEngineCegis, CoarserVerifierStillCertifies) {
  ASSERT_TRUE(result_->candidate);
  VerifierConfig cfg;
  cfg.resolution = 20;
  cfg.max_depth = 9;
  EXPECT_EQ(verify_candidate(*result_->candidate, *problem_, 1.0, cfg).status,
            VerificationStatus::kCertified);
}

TEST_F(JetEngineCegis, PositiveScalingKeepsFeasibility) {
  ASSERT_TRUE(result_->candidate);
  for (double lambda : {0.5, 2.0, 10.0}) {
    BarrierCandidate scaled = *result_->candidate;
    scaled.coefficients *= lambda;
    const auto sys = encode_feasibility(scaled.basis, *problem_, result_->samples, lambda);
    EXPECT_TRUE(sys.satisfied_by(scaled.coefficients)) << lambda;
    EXPECT_EQ(verify_candidate(scaled, *problem_, lambda).status, VerificationStatus::kCertified)
        << lambda;
  }
}

TEST_F(JetEngineCegis, TrueDynamicsCheckPasses) {
  ASSERT_TRUE(result_->candidate);
  const auto rep = check_conditions_known_dynamics(*result_->candidate, jet_engine_system(),
                                                   problem_->spec, 200);
  EXPECT_TRUE(rep.holds());
  EXPECT_GT(rep.flow.points, 0u);
}

TEST(KnownDynamics, PublishedBarrierMeetsRegionConditions) {
  const auto rep = check_conditions_known_dynamics(reference_jet_engine_barrier(),
                                                   jet_engine_system(), jet_engine_problem(), 100);
  EXPECT_EQ(rep.unsafe.points, 20000u);
  EXPECT_EQ(rep.unsafe.violations, 0u);
  // Fails as published: B(1, -1) = 33.78 on X0 and B(-1, -2.5) = -315.0 on X1.
  EXPECT_EQ(rep.init.violations, 0u);
}

TEST(KnownDynamics, ZeroBarrierFailsOnlyUnsafe) {
  const BarrierCandidate zero{BarrierTemplate(2, 1), Vector::Zero(3)};
  const auto rep = check_conditions_known_dynamics(zero, jet_engine_system(), jet_engine_problem(), 30);
  EXPECT_EQ(rep.init.violations, 0u);
  EXPECT_EQ(rep.flow.violations, 0u);
  EXPECT_EQ(rep.unsafe.violations, rep.unsafe.points);
}

TEST(Conditions, NamesRoundTrip) {
  for (auto c : {Condition::kInit, Condition::kUnsafe, Condition::kFlow}) {
    EXPECT_EQ(condition_from_string(to_string(c)), c);
  }
  EXPECT_EQ(to_string(SynthesisOutcome::kInfeasibleTemplate), "infeasible-template");
  EXPECT_EQ(to_string(SynthesisOutcome::kBudgetExhausted), "budget-exhausted");
}

TEST(Samples, InitialSamplesLieInTheirRegions) {
  const auto spec = jet_engine_problem();
  for (auto scheme : {SamplingScheme::kGrid, SamplingScheme::kLatinHypercube}) {
    const auto s = initial_samples(spec, 5, scheme, 3);
    EXPECT_NO_THROW(s.validate(spec));
    EXPECT_EQ(s.init.size(), 25u);
    EXPECT_EQ(s.unsafe.size(), 50u);
    EXPECT_EQ(s.flow.size(), 25u);
  }
}

}  // namespace
}  // namespace gpcbf
