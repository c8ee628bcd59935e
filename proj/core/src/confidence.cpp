#include "gpcbf/confidence.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <random>
#include <stdexcept>
#include <thread>

#include <boost/math/special_functions/beta.hpp>

namespace gpcbf {

void ErrorBoundParams::validate() const {
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw std::invalid_argument("ErrorBoundParams: epsilon must be in (0,1)");
  }
  if (rkhs_norm_bounds.size() != info_gains.size()) {
    throw std::invalid_argument(
        "ErrorBoundParams: norm bounds and information gains differ in size");
  }
  if ((rkhs_norm_bounds.array() < 0.0).any() ||
      (info_gains.array() < 0.0).any()) {
    throw std::invalid_argument(
        "ErrorBoundParams: norm bounds and information gains must be >= 0");
  }
  if (sample_count < 0) {
    throw std::invalid_argument("ErrorBoundParams: sample_count < 0");
  }
}

double beta_bound(const ErrorBoundParams& params, int j) {
  params.validate();
  if (j < 0 || j >= params.rkhs_norm_bounds.size()) {
    throw std::out_of_range("beta_bound: output index out of range");
  }
  const double log_term =
      std::log((params.sample_count + 1.0) / params.epsilon);
  const double norm = params.rkhs_norm_bounds[j];
  return std::sqrt(2.0 * norm * norm +
                   300.0 * params.info_gains[j] * log_term * log_term * log_term);
}

Vector beta_bounds(const ErrorBoundParams& params) {
  Vector beta(params.rkhs_norm_bounds.size());
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    beta[j] = beta_bound(params, static_cast<int>(j));
  }
  return beta;
}

double information_gain_greedy(const KernelSpec& kernel,
                               const Matrix& candidates, int budget,
                               double noise_std) {
  if (candidates.rows() == 0) {
    throw std::invalid_argument("information_gain_greedy: no candidates");
  }
  if (!(noise_std > 0.0)) {
    throw std::invalid_argument("information_gain_greedy: noise_std must be > 0");
  }
  if (budget <= 0) return 0.0;
  const Eigen::Index count = candidates.rows();
  const double noise_var = noise_std * noise_std;

  // Posterior variances under the selected observations, maintained by the
  // rank-one Schur complement update (pivoted Cholesky on K + noise^2 I).
  Vector var = Vector::Constant(count, kernel.signal_variance);
  Matrix factors(budget, count);
  double gain = 0.0;
  for (int t = 0; t < budget; ++t) {
    Eigen::Index pick = 0;
    for (Eigen::Index c = 1; c < count; ++c) {
      if (var[c] > var[pick]) pick = c;
    }
    const double pivot = var[pick] + noise_var;
    gain += 0.5 * std::log(pivot / noise_var);
    const Vector xs = candidates.row(pick).transpose();
    const double scale = 1.0 / std::sqrt(pivot);
    for (Eigen::Index c = 0; c < count; ++c) {
      double cov = kernel_eval(kernel, candidates.row(c).transpose(), xs);
      for (int s = 0; s < t; ++s) cov -= factors(s, c) * factors(s, pick);
      factors(t, c) = cov * scale;
    }
    for (Eigen::Index c = 0; c < count; ++c) {
      var[c] = std::max(0.0, var[c] - factors(t, c) * factors(t, c));
    }
  }
  return gain;
}

std::vector<Vector> ConfidenceBox::vertices() const {
  const int n = dim();
  std::vector<Vector> out;
  out.reserve(std::size_t{1} << n);
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    Vector d(n);
    for (int j = 0; j < n; ++j) {
      d[j] = (mask >> j) & 1u ? half_widths[j] : -half_widths[j];
    }
    out.push_back(std::move(d));
  }
  return out;
}

bool ConfidenceBox::contains(const Vector& d, double tol) const {
  return d.size() == half_widths.size() &&
         (d.array().abs() <= half_widths.array() + tol).all();
}

std::string to_string(ConfidenceBox::Provenance p) {
  return p == ConfidenceBox::Provenance::kAnalytic ? "analytic"
                                                   : "monte-carlo-validated";
}

ConfidenceBox build_confidence_box(const Vector& beta, const StdBound& bound,
                                   std::optional<double> epsilon) {
  if (beta.size() != bound.max_std.size()) {
    throw std::invalid_argument("build_confidence_box: dimension mismatch");
  }
  if ((beta.array() < 0.0).any()) {
    throw std::invalid_argument("build_confidence_box: beta must be >= 0");
  }
  ConfidenceBox box;
  box.half_widths = beta.cwiseProduct(bound.max_std);
  box.provenance = ConfidenceBox::Provenance::kAnalytic;
  if (epsilon) {
    box.probability_lower_bound =
        std::pow(1.0 - *epsilon, static_cast<double>(beta.size()));
  }
  return box;
}

ConfidenceBox uniform_confidence_box(int n, double half_width) {
  if (!(half_width >= 0.0)) {
    throw std::invalid_argument("uniform_confidence_box: half_width < 0");
  }
  ConfidenceBox box;
  box.half_widths = Vector::Constant(n, half_width);
  box.provenance = ConfidenceBox::Provenance::kMonteCarloValidated;
  return box;
}

BinomialInterval clopper_pearson(std::uint64_t successes, std::uint64_t trials,
                                 double confidence) {
  if (trials == 0 || successes > trials) {
    throw std::invalid_argument("clopper_pearson: need 0 <= k <= n, n >= 1");
  }
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw std::invalid_argument("clopper_pearson: confidence must be in (0,1)");
  }
  const double tail = 0.5 * (1.0 - confidence);
  const double k = static_cast<double>(successes);
  const double n = static_cast<double>(trials);
  BinomialInterval ci;
  ci.lower = successes == 0 ? 0.0 : boost::math::ibeta_inv(k, n - k + 1.0, tail);
  ci.upper =
      successes == trials ? 1.0 : boost::math::ibetac_inv(k + 1.0, n - k, tail);
  return ci;
}

int default_thread_count() {
  if (const char* env = std::getenv("GPCBF_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

ContainmentEstimate monte_carlo_containment(
    const GPPosterior& gp, const ControlAffineSystem& truth,
    const ProblemSpec& spec, const ConfidenceBox& box, std::uint64_t trials,
    int grid_per_dim, double confidence, std::uint64_t seed, int threads) {
  if (trials < 1) {
    throw std::invalid_argument("monte_carlo_containment: trials must be >= 1");
  }
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw std::invalid_argument(
        "monte_carlo_containment: confidence must be in (0,1)");
  }
  if (!truth.has_drift()) {
    throw std::invalid_argument(
        "monte_carlo_containment: needs the true drift oracle");
  }
  if (box.dim() != gp.dim() || spec.n != gp.dim()) {
    throw std::invalid_argument("monte_carlo_containment: dimension mismatch");
  }
  const int n = spec.n;
  const Vector lo = spec.state_box.lower;
  const Vector width = spec.state_box.widths();

  std::vector<std::uint64_t> shard_successes(kMonteCarloShards, 0);
  auto run_shard = [&](int shard) {
    const std::uint64_t quota =
        trials / kMonteCarloShards +
        (static_cast<std::uint64_t>(shard) < trials % kMonteCarloShards ? 1 : 0);
    std::seed_seq seq{static_cast<std::uint32_t>(seed),
                      static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(shard)};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> node(0, std::max(grid_per_dim - 1, 0));
    std::uint64_t ok = 0;
    Vector x(n);
    for (std::uint64_t t = 0; t < quota; ++t) {
      for (int d = 0; d < n; ++d) {
        if (grid_per_dim > 1) {
          x[d] = lo[d] + width[d] * node(rng) / (grid_per_dim - 1);
        } else {
          x[d] = lo[d] + width[d] * unit(rng);
        }
      }
      const Vector err = truth.drift(x) - gp.mean(x);
      if ((err.array().abs() <= box.half_widths.array()).all()) ++ok;
    }
    shard_successes[shard] = ok;
  };

  const int workers =
      std::clamp(threads > 0 ? threads : default_thread_count(), 1,
                 kMonteCarloShards);
  if (workers == 1) {
    for (int s = 0; s < kMonteCarloShards; ++s) run_shard(s);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (int s = next++; s < kMonteCarloShards; s = next++) run_shard(s);
      });
    }
    for (auto& t : pool) t.join();
  }

  ContainmentEstimate est;
  est.trials = trials;
  for (auto s : shard_successes) est.successes += s;
  const BinomialInterval ci = clopper_pearson(est.successes, trials, confidence);
  est.lower_bound = ci.lower;
  est.upper_bound = ci.upper;
  est.confidence = confidence;
  est.seed = seed;
  est.grid_per_dim = grid_per_dim;
  est.trial_semantics =
      grid_per_dim > 1 ? "uniform-grid-node-sample" : "uniform-state-sample";
  return est;
}

}  // namespace gpcbf
