#include <benchmark/benchmark.h>

#include <memory>

#include "gpcbf/confidence.hpp"
#include "gpcbf/drift_model.hpp"
#include "gpcbf/synthesis.hpp"

using namespace gpcbf;

namespace {

std::vector<KernelSpec> published_kernels() {
  KernelSpec a, b;
  a.signal_variance = 224.4168;
  a.length_scales = (Vector(2) << 6.6030, 327.5503).finished();
  b.signal_variance = 24.5311;
  b.length_scales = (Vector(2) << 42.1995, 6.4648e6).finished();
  return {a, b};
}

std::shared_ptr<GPPosterior> jet_gp(int n) {
  const auto data = generate_training_data(jet_engine_system(), jet_engine_problem(), n, 0.01, 7);
  return std::make_shared<GPPosterior>(GPPosterior::fit(data, published_kernels()));
}

void BM_PosteriorMean(benchmark::State& st) {
  const auto gp = jet_gp(static_cast<int>(st.range(0)));
  const Vector x = (Vector(2) << 0.4, -0.3).finished();
  for (auto _ : st) benchmark::DoNotOptimize(gp->mean(x));
}
BENCHMARK(BM_PosteriorMean)->Arg(35)->Arg(100);

void BM_PosteriorVariance(benchmark::State& st) {
  const auto gp = jet_gp(static_cast<int>(st.range(0)));
  const Vector x = (Vector(2) << 0.4, -0.3).finished();
  for (auto _ : st) benchmark::DoNotOptimize(gp->variance(x));
}
BENCHMARK(BM_PosteriorVariance)->Arg(35)->Arg(100);

void BM_StdBound(benchmark::State& st) {
  const auto gp = jet_gp(35);
  for (auto _ : st) {
    benchmark::DoNotOptimize(max_std_bound(*gp, jet_engine_problem().state_box,
                                           static_cast<int>(st.range(0))));
  }
}
BENCHMARK(BM_StdBound)->Arg(51)->Arg(201)->Unit(benchmark::kMillisecond);

SynthesisProblem jet_problem() {
  const auto spec = jet_engine_problem();
  return make_synthesis_problem(spec, jet_engine_system(), std::make_shared<GPMeanDrift>(jet_gp(35)),
                                uniform_confidence_box(2, 0.05));
}

void BM_SolveCandidate(benchmark::State& st) {
  const auto prob = jet_problem();
  const BarrierTemplate t(2, 2);
  const SampleSet s = initial_samples(prob.spec, 5, SamplingScheme::kGrid, 0);
  const auto sys = encode_feasibility(t, prob, s, 1.0);
  for (auto _ : st) benchmark::DoNotOptimize(solve_candidate(sys, t));
}
BENCHMARK(BM_SolveCandidate)->Unit(benchmark::kMillisecond);

void BM_VerifyCandidate(benchmark::State& st) {
  const auto prob = jet_problem();
  const auto res = cegis(BarrierTemplate(2, 2), prob);
  VerifierConfig cfg;
  cfg.threads = 1;
  for (auto _ : st) benchmark::DoNotOptimize(verify_candidate(*res.candidate, prob, 1.0, cfg));
}
BENCHMARK(BM_VerifyCandidate)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
