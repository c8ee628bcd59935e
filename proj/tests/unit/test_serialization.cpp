#include <gtest/gtest.h>

#include <cmath>
#include <algorithm>
#include <cstring>
#include <filesystem>

#include "gpcbf/serialization.hpp"

namespace gpcbf {
namespace {

Vector v2(double a, double b) { return (Vector(2) << a, b).finished(); }

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

TEST(ProblemJson, JetEngineRoundTrip) {
  const ProblemFile p = builtin_problem("jet-engine");
  const ProblemFile q = problem_from_json(to_json(p));
  EXPECT_EQ(q.system, "jet-engine");
  EXPECT_EQ(q.spec.n, 2);
  EXPECT_EQ(q.spec.m, 1);
  EXPECT_EQ(q.spec.state_box.lower, p.spec.state_box.lower);
  EXPECT_EQ(q.spec.state_box.upper, p.spec.state_box.upper);
  ASSERT_EQ(q.spec.unsafe_boxes.size(), 2u);
  ASSERT_EQ(q.spec.inputs.size(), 9u);
  for (std::size_t k = 0; k < 9; ++k) EXPECT_EQ(q.spec.inputs[k], p.spec.inputs[k]);
  EXPECT_EQ(to_json(q).dump(), to_json(p).dump());
}

TEST(ProblemJson, UnknownBuiltinsAreRejected) {
  EXPECT_THROW(builtin_problem("pendulum"), std::invalid_argument);
  EXPECT_THROW(builtin_system("pendulum"), std::invalid_argument);
}

TEST(ProblemJson, MissingFieldIsNamed) {
  Json j = to_json(builtin_problem("jet-engine"));
  j.erase("inputs");
  try {
    problem_from_json(j, "p.json");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.field(), "inputs");
    EXPECT_NE(std::string(e.what()).find("p.json"), std::string::npos);
  }
}

TEST(ProblemJson, InconsistentRegionsAreRejected) {
  Json j = to_json(builtin_problem("jet-engine"));
  j["inputs"] = Json::array({Json::array({1.0, 2.0})});  // m = 2 for a 1-input system
  EXPECT_ANY_THROW(problem_from_json(j));
}

TEST(TrainingCsv, RoundTripIsExact) {
  TrainingSet d;
  d.states = Matrix(2, 2);
  d.states << 0.1, -1.0 / 3.0, 2.5, 1e-300;
  d.targets = Matrix(2, 2);
  d.targets << std::nextafter(1.0, 2.0), -0.0, 3.14159, 12345.678;
  d.noise_std = 0.01;
  const std::string csv = training_set_to_csv(d);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "x1,x2,y1,y2");
  const TrainingSet e = training_set_from_csv(csv, 2);
  ASSERT_EQ(e.size(), 2);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      EXPECT_TRUE(same_bits(e.states(i, j), d.states(i, j)));
      EXPECT_TRUE(same_bits(e.targets(i, j), d.targets(i, j)));
    }
  }
}

TEST(TrainingCsv, ErrorsNameLineAndField) {
  try {
    training_set_from_csv("x1,x2,y1,y2\n0,0,nan,1\n", 2, "bad.csv");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_EQ(e.field(), "y1");
    EXPECT_EQ(std::string(e.what()).rfind("bad.csv:2: field 'y1': not a finite number", 0), 0u);
  }
  try {
    training_set_from_csv("x1,x2,y1,y2\n0,0,1,2\n0,0,1\n", 2, "short.csv");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  EXPECT_THROW(training_set_from_csv("x1,x2,y1\n0,0,1\n", 2), ParseError);
  EXPECT_THROW(training_set_from_csv("x1,x2,y1,y2\n0,zero,1,2\n", 2), ParseError);
}

TEST(ModelJson, ReloadIsBitForBit) {
  const auto sys = jet_engine_system();
  const auto spec = jet_engine_problem();
  const TrainingSet data = generate_training_data(sys, spec, 20, 0.01, 3);
  KernelSpec k1{KernelKind::kSquaredExponential, 2.0, v2(1.3, 2.1)};
  KernelSpec k2{KernelKind::kSquaredExponential, 0.7, v2(0.9, 1.7)};
  const GPPosterior gp = GPPosterior::fit(data, {k1, k2});
  const Json j = model_to_json(gp, std::string("data.csv"));
  const GPPosterior back = model_from_json(Json::parse(j.dump()));
  ASSERT_EQ(back.num_samples(), 20);
  for (int o = 0; o < 2; ++o) {
    EXPECT_TRUE(same_bits(back.kernel(o).signal_variance, gp.kernel(o).signal_variance));
    for (const auto& x : {v2(0.3, -1.2), v2(2.9, 3.9)}) {
      EXPECT_TRUE(same_bits(back.mean(o, x), gp.mean(o, x)));
      EXPECT_TRUE(same_bits(back.variance(o, x), gp.variance(o, x)));
    }
  }
  EXPECT_EQ(model_to_json(back, std::string("data.csv")).dump(), j.dump());
}

TEST(ModelJson, BadKernelIsRejected) {
  Json k = to_json(KernelSpec{KernelKind::kSquaredExponential, 1.0, v2(1, 1)});
  k["signal_variance"] = -1.0;
  EXPECT_ANY_THROW(kernel_from_json(k));
  k["signal_variance"] = "big";
  EXPECT_THROW(kernel_from_json(k), ParseError);
}

TEST(BarrierJson, RoundTripKeepsCoefficientsAndStatus) {
  const BarrierCandidate b = reference_jet_engine_barrier();
  const BarrierFile f = barrier_from_json(Json::parse(barrier_to_json(b, 1.0, std::nullopt).dump()));
  EXPECT_FALSE(f.certified);
  EXPECT_EQ(f.margin, 1.0);
  EXPECT_EQ(f.candidate.basis.degree(), 2);
  ASSERT_EQ(f.candidate.coefficients.size(), 6);
  for (int i = 0; i < 6; ++i) {
    EXPECT_TRUE(same_bits(f.candidate.coefficients[i], b.coefficients[i]));
  }
}

TEST(ConfidenceBoxJson, RoundTrip) {
  ConfidenceBox box;
  box.half_widths = v2(0.05, 0.125);
  box.provenance = ConfidenceBox::Provenance::kMonteCarloValidated;
  const ConfidenceBox back = confidence_box_from_json(to_json(box));
  EXPECT_EQ(back.half_widths, box.half_widths);
  EXPECT_EQ(back.provenance, box.provenance);
}

TEST(TrajectoryCsv, HeaderAndRowCount) {
  Trajectory t;
  t.times = {0.0, 0.1};
  t.states = {v2(0, 0), v2(1, 2)};
  t.inputs = {Vector::Constant(1, -2.0)};
  t.barrier_values = {-1.0, -0.5};
  t.safe = {true, true};
  const std::string csv = trajectory_to_csv(t, 1);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,x1,x2,u1,B,safe");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
}

TEST(Files, WriteThenRead) {
  const auto dir = std::filesystem::temp_directory_path() / "gpcbf_serialization_test";
  std::filesystem::create_directories(dir);
  write_json_file(dir / "a.json", Json{{"k", 1.5}});
  EXPECT_EQ(read_json_file(dir / "a.json")["k"].get<double>(), 1.5);
  EXPECT_ANY_THROW(read_json_file(dir / "missing.json"));
  write_text_file(dir / "b.txt", "{not json");
  EXPECT_ANY_THROW(read_json_file(dir / "b.txt"));
  std::filesystem::remove_all(dir);
}

TEST(FormatDouble, RoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 6.4648e6}) {
    EXPECT_TRUE(same_bits(std::stod(format_double(v)), v));
  }
}

}  // namespace
}  // namespace gpcbf
