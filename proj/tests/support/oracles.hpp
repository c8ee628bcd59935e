#pragma once

// Independent reference computations for the tests. Nothing here calls the
// library's numerical routines; only its plain data types are shared.

#include <cmath>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gpcbf/dynamics.hpp"
#include "gpcbf/gp.hpp"

namespace gpcbf::oracle {

inline double se_kernel(double s2, const Vector& l, const Vector& x, const Vector& y) {
  double r = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double d = (x[i] - y[i]) / l[i];
    r += d * d;
  }
  return s2 * std::exp(-0.5 * r);
}

/// Posterior mean and variance of output j by an explicit LU solve of
/// (K + noise^2 I) against y_j and k(X, x).
inline std::pair<double, double> dense_posterior(const TrainingSet& data,
                                                 const KernelSpec& k, int j,
                                                 const Vector& x) {
  const int n = data.size();
  const double prior = se_kernel(k.signal_variance, k.length_scales, x, x);
  if (n == 0) return {0.0, prior};
  Matrix a(n, n);
  Vector kx(n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      a(r, c) = se_kernel(k.signal_variance, k.length_scales, data.state(r), data.state(c));
    }
    a(r, r) += data.noise_std * data.noise_std;
    kx[r] = se_kernel(k.signal_variance, k.length_scales, data.state(r), x);
  }
  Eigen::FullPivLU<Matrix> lu(a);
  const Vector y = data.targets.col(j);
  const double mean = kx.dot(lu.solve(y));
  const double var = prior - kx.dot(lu.solve(kx));
  return {mean, var};
}

/// Clopper-Pearson bounds by bisection on the binomial tail sums, computed
/// in log space with lgamma. Only suitable for moderate trial counts.
inline double binomial_cdf(std::uint64_t k, std::uint64_t n, double p) {
  if (p <= 0.0) return 1.0;
  if (p >= 1.0) return k >= n ? 1.0 : 0.0;
  double s = 0.0;
  for (std::uint64_t i = 0; i <= k; ++i) {
    const double lg = std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0) +
                      i * std::log(p) + (n - i) * std::log1p(-p);
    s += std::exp(lg);
  }
  return std::min(s, 1.0);
}

inline std::pair<double, double> clopper_pearson_bisect(std::uint64_t k, std::uint64_t n,
                                                        double confidence) {
  const double alpha = 1.0 - confidence;
  double lower = 0.0, upper = 1.0;
  if (k > 0) {
    // P(X >= k | p) = alpha / 2
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double tail = 1.0 - binomial_cdf(k - 1, n, mid);
      (tail < alpha / 2 ? lo : hi) = mid;
    }
    lower = 0.5 * (lo + hi);
  }
  if (k < n) {
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double tail = binomial_cdf(k, n, mid);
      (tail > alpha / 2 ? lo : hi) = mid;
    }
    upper = 0.5 * (lo + hi);
  }
  return {lower, upper};
}

/// Random GP regression instance with well-separated noise.
struct GpInstance {
  TrainingSet data;
  std::vector<KernelSpec> kernels;
};

inline GpInstance random_instance(std::mt19937_64& rng, int max_n = 3, int max_samples = 50) {
  std::uniform_int_distribution<int> dim(1, max_n), count(1, max_samples);
  std::uniform_real_distribution<double> state(-2.0, 2.0), s2(0.5, 2.0), ls(0.3, 2.0),
      noise(0.1, 0.5), target(-3.0, 3.0);
  GpInstance inst;
  const int n = dim(rng);
  const int count_n = count(rng);
  inst.data.states.resize(count_n, n);
  inst.data.targets.resize(count_n, n);
  for (int i = 0; i < count_n; ++i) {
    for (int d = 0; d < n; ++d) {
      inst.data.states(i, d) = state(rng);
      inst.data.targets(i, d) = target(rng);
    }
  }
  inst.data.noise_std = noise(rng);
  for (int j = 0; j < n; ++j) {
    KernelSpec k;
    k.signal_variance = s2(rng);
    k.length_scales.resize(n);
    for (int d = 0; d < n; ++d) k.length_scales[d] = ls(rng);
    inst.kernels.push_back(k);
  }
  return inst;
}

}  // namespace gpcbf::oracle
