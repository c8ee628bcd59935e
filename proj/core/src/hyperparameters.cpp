#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "gpcbf/gp.hpp"

namespace gpcbf {

double log_marginal_likelihood(const TrainingSet& data, int output,
                               const KernelSpec& kernel, double noise_std,
                               Vector* grad) {
  const int count = data.size();
  const int n = data.dim();
  Matrix gram(count, count);
  for (int a = 0; a < count; ++a) {
    gram(a, a) = kernel.signal_variance;
    for (int b = 0; b < a; ++b) {
      const double v = kernel_eval(kernel, data.state(a), data.state(b));
      gram(a, b) = v;
      gram(b, a) = v;
    }
  }
  Matrix system = gram;
  system.diagonal().array() += noise_std * noise_std;
  Eigen::LLT<Matrix> llt(system);
  // Same acceptance rule as GPPosterior::fit, so the optimum stays usable.
  if (llt.info() != Eigen::Success ||
      llt.rcond() < GPPosterior::kMinReciprocalCondition) {
    return -std::numeric_limits<double>::infinity();
  }
  const Vector y = data.targets.col(output);
  const Vector alpha = llt.solve(y);
  const double log_det =
      2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  const double value = -0.5 * y.dot(alpha) - 0.5 * log_det -
                       0.5 * count * std::log(2.0 * std::numbers::pi);
  if (grad) {
    // d/dtheta = 0.5 tr((alpha alpha^T - A^-1) dA/dtheta)
    const Matrix inner = alpha * alpha.transpose() -
                         llt.solve(Matrix::Identity(count, count));
    grad->resize(n + 2);
    Matrix kern = gram;  // noise-free kernel part
    (*grad)[0] = 0.5 * (inner.cwiseProduct(kern)).sum();
    for (int d = 0; d < n; ++d) {
      const double l2 = kernel.length_scales[d] * kernel.length_scales[d];
      Matrix dk(count, count);
      for (int a = 0; a < count; ++a) {
        for (int b = 0; b < count; ++b) {
          const double diff = data.states(a, d) - data.states(b, d);
          dk(a, b) = kern(a, b) * diff * diff / l2;
        }
      }
      (*grad)[1 + d] = 0.5 * (inner.cwiseProduct(dk)).sum();
    }
    (*grad)[n + 1] = inner.trace() * noise_std * noise_std;
  }
  return value;
}

namespace {

// Packed parameter layout: per output [log sf2, log l_1..l_n], then an
// optional shared log noise_std.
struct Packing {
  int n;
  bool fit_noise;
  int size() const { return n * (n + 1) + (fit_noise ? 1 : 0); }
};

Vector pack(const Packing& p, const std::vector<KernelSpec>& ks,
            double noise_std) {
  Vector theta(p.size());
  for (int j = 0; j < p.n; ++j) {
    theta[j * (p.n + 1)] = std::log(ks[j].signal_variance);
    for (int d = 0; d < p.n; ++d) {
      theta[j * (p.n + 1) + 1 + d] = std::log(ks[j].length_scales[d]);
    }
  }
  if (p.fit_noise) theta[p.size() - 1] = std::log(noise_std);
  return theta;
}

void unpack(const Packing& p, const Vector& theta, double fixed_noise,
            std::vector<KernelSpec>* ks, double* noise_std) {
  ks->assign(p.n, KernelSpec{});
  for (int j = 0; j < p.n; ++j) {
    (*ks)[j].signal_variance = std::exp(theta[j * (p.n + 1)]);
    (*ks)[j].length_scales.resize(p.n);
    for (int d = 0; d < p.n; ++d) {
      (*ks)[j].length_scales[d] = std::exp(theta[j * (p.n + 1) + 1 + d]);
    }
  }
  *noise_std = p.fit_noise ? std::exp(theta[p.size() - 1]) : fixed_noise;
}

struct Objective {
  const TrainingSet& data;
  Packing packing;
  double fixed_noise;

  // Negative summed log marginal likelihood and its gradient.
  double operator()(const Vector& theta, Vector* grad) const {
    std::vector<KernelSpec> ks;
    double noise = 0.0;
    unpack(packing, theta, fixed_noise, &ks, &noise);
    const int n = packing.n;
    double total = 0.0;
    if (grad) grad->setZero(packing.size());
    for (int j = 0; j < n; ++j) {
      Vector g;
      const double v =
          log_marginal_likelihood(data, j, ks[j], noise, grad ? &g : nullptr);
      if (!std::isfinite(v)) return std::numeric_limits<double>::infinity();
      total += v;
      if (grad) {
        grad->segment(j * (n + 1), n + 1) -= g.head(n + 1);
        if (packing.fit_noise) (*grad)[packing.size() - 1] -= g[n + 1];
      }
    }
    return -total;
  }
};

struct BfgsResult {
  Vector theta;
  double value;
  bool converged;
};

// Projected BFGS with Armijo backtracking on a box.
BfgsResult minimize_bfgs(const Objective& f, Vector theta, const Vector& lo,
                         const Vector& hi, int max_iterations, double gtol) {
  const int dim = static_cast<int>(theta.size());
  theta = theta.cwiseMax(lo).cwiseMin(hi);
  Vector grad;
  double value = f(theta, &grad);
  if (!std::isfinite(value)) return {theta, value, false};
  Matrix h_inv = Matrix::Identity(dim, dim);

  auto projected_gradient = [&](const Vector& t, const Vector& g) {
    Vector pg = g;
    for (int i = 0; i < dim; ++i) {
      if ((t[i] <= lo[i] && g[i] > 0.0) || (t[i] >= hi[i] && g[i] < 0.0)) {
        pg[i] = 0.0;
      }
    }
    return pg;
  };

  for (int it = 0; it < max_iterations; ++it) {
    const Vector pg = projected_gradient(theta, grad);
    if (pg.lpNorm<Eigen::Infinity>() < gtol) return {theta, value, true};
    Vector dir = -h_inv * pg;
    for (int i = 0; i < dim; ++i) {
      if (pg[i] == 0.0) dir[i] = 0.0;
    }
    if (dir.dot(pg) >= 0.0) {
      h_inv.setIdentity();
      dir = -pg;
    }
    // Keep trial steps modest in log space.
    const double max_step = dir.lpNorm<Eigen::Infinity>();
    if (max_step > 2.0) dir *= 2.0 / max_step;

    double step = 1.0;
    Vector trial;
    Vector trial_grad;
    double trial_value = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      trial = (theta + step * dir).cwiseMax(lo).cwiseMin(hi);
      trial_value = f(trial, &trial_grad);
      if (std::isfinite(trial_value) &&
          trial_value <= value + 1e-4 * pg.dot(trial - theta)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) return {theta, value, true};
    const Vector s = trial - theta;
    const Vector yv = trial_grad - grad;
    const double sy = s.dot(yv);
    if (sy > 1e-12) {
      const double rho = 1.0 / sy;
      const Matrix ident = Matrix::Identity(dim, dim);
      h_inv = (ident - rho * s * yv.transpose()) * h_inv *
                  (ident - rho * yv * s.transpose()) +
              rho * s * s.transpose();
    }
    const double improvement = value - trial_value;
    theta = trial;
    value = trial_value;
    grad = trial_grad;
    if (improvement < 1e-12 * (1.0 + std::abs(value))) {
      return {theta, value, true};
    }
  }
  return {theta, value, false};
}

}  // namespace

HyperparameterFit fit_hyperparameters(const TrainingSet& data,
                                      const std::vector<KernelSpec>& init,
                                      std::uint64_t seed,
                                      const HyperparameterOptions& options) {
  if (data.size() < 2) {
    throw std::invalid_argument("fit_hyperparameters: need at least 2 samples");
  }
  const int n = data.dim();
  if (static_cast<int>(init.size()) != n) {
    throw std::invalid_argument(
        "fit_hyperparameters: one initial kernel per output required");
  }
  for (const auto& k : init) k.validate();
  if (options.restarts < 1) {
    throw std::invalid_argument("fit_hyperparameters: restarts must be >= 1");
  }
  if (options.fit_noise && !(data.noise_std > 0.0)) {
    throw std::invalid_argument(
        "fit_hyperparameters: noise fitting needs a positive initial noise");
  }

  const Packing packing{n, options.fit_noise};
  const Objective objective{data, packing, data.noise_std};
  Vector lo(packing.size());
  Vector hi(packing.size());
  for (int j = 0; j < n; ++j) {
    lo[j * (n + 1)] = options.min_log_signal_variance;
    hi[j * (n + 1)] = options.max_log_signal_variance;
    for (int d = 0; d < n; ++d) {
      lo[j * (n + 1) + 1 + d] = options.min_log_length_scale;
      hi[j * (n + 1) + 1 + d] = options.max_log_length_scale;
    }
  }
  if (options.fit_noise) {
    lo[packing.size() - 1] = options.min_log_noise_std;
    hi[packing.size() - 1] = options.max_log_noise_std;
  }

  const Vector base = pack(packing, init, data.noise_std);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  HyperparameterFit best;
  best.log_marginal_likelihood = -std::numeric_limits<double>::infinity();
  Vector best_theta;
  for (int r = 0; r < options.restarts; ++r) {
    Vector start = base;
    if (r > 0) {
      for (Eigen::Index i = 0; i < start.size(); ++i) start[i] += gauss(rng);
    }
    start = start.cwiseMax(lo).cwiseMin(hi);
    const double start_value = objective(start, nullptr);
    best.start_log_likelihoods.push_back(-start_value);
    const BfgsResult res =
        minimize_bfgs(objective, start, lo, hi, options.max_iterations,
                      options.gradient_tolerance);
    const double lml = -res.value;
    best.restart_log_likelihoods.push_back(lml);
    if (!std::isfinite(lml)) continue;
    if (res.converged) ++best.converged_restarts;
    if (lml > best.log_marginal_likelihood) {
      best.log_marginal_likelihood = lml;
      best_theta = res.theta;
    }
  }
  if (best_theta.size() == 0) {
    unpack(packing, base, data.noise_std, &best.kernels, &best.noise_std);
    throw HyperparameterFitError(
        "fit_hyperparameters: every restart diverged", best);
  }
  unpack(packing, best_theta, data.noise_std, &best.kernels, &best.noise_std);
  return best;
}

}  // namespace gpcbf
