#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "gpcbf/dynamics.hpp"

namespace gpcbf {

enum class KernelKind { kSquaredExponential };

std::string to_string(KernelKind kind);
KernelKind kernel_kind_from_string(const std::string& name);

/// k(x, x') = signal_variance * exp(-sum_i (x_i - x'_i)^2 / (2 l_i^2)).
struct KernelSpec {
  KernelKind kind = KernelKind::kSquaredExponential;
  double signal_variance = 1.0;
  Vector length_scales;

  int dim() const { return static_cast<int>(length_scales.size()); }
  void validate() const;
};

double kernel_eval(const KernelSpec& k, const Vector& x, const Vector& xp);

/// Gradient of k(x, x') with respect to x.
Vector kernel_gradient(const KernelSpec& k, const Vector& x, const Vector& xp);

/// Gram system could not be factorized even after jitter escalation, or its
/// reciprocal condition estimate fell below the accepted floor.
class IllConditionedError : public std::runtime_error {
 public:
  IllConditionedError(const std::string& what, int output, double rcond)
      : std::runtime_error(what), output_(output), rcond_(rcond) {}
  int output() const { return output_; }
  double rcond() const { return rcond_; }

 private:
  int output_;
  double rcond_;
};

/// Zero-mean multi-output GP posterior, one independent GP per state
/// dimension. Immutable after fit(); concurrent queries are safe.
class GPPosterior {
 public:
  static constexpr double kMinReciprocalCondition = 1e-13;
  static constexpr double kJitterStart = 1e-10;
  static constexpr double kJitterMax = 1e-6;

  /// Factorizes (K_j + noise^2 I) once per output. An empty training set
  /// (zero rows) yields the prior.
  static GPPosterior fit(const TrainingSet& data,
                         std::vector<KernelSpec> kernels);

  int dim() const { return static_cast<int>(outputs_.size()); }
  int num_samples() const { return data_.size(); }
  double noise_std() const { return data_.noise_std; }
  const TrainingSet& data() const { return data_; }
  const KernelSpec& kernel(int j) const { return outputs_[j].kernel; }
  std::vector<KernelSpec> kernels() const;

  /// (K_j + noise^2 I + jitter I)^-1 y_j
  const Vector& alpha(int j) const { return outputs_[j].alpha; }
  /// Extra diagonal added during factorization (0 when none was needed).
  double jitter(int j) const { return outputs_[j].jitter; }
  /// y_j^T (K_j + noise^2 I)^-1 y_j, the squared RKHS norm bound of mu_j.
  double target_energy(int j) const { return outputs_[j].target_energy; }

  double mean(int j, const Vector& x) const;
  double variance(int j, const Vector& x) const;
  Vector mean(const Vector& x) const;
  Vector variance(const Vector& x) const;

  /// (j, d) entry is d mu_j / d x_d.
  Matrix mean_jacobian(const Vector& x) const;
  Vector variance_gradient(int j, const Vector& x) const;
  /// Posterior variance of each partial derivative d f_j / d x_d at x.
  Vector gradient_variance(int j, const Vector& x) const;

  /// Replaces the mean weights with stored ones. Used when reloading a
  /// serialized model; throws if sizes differ.
  void set_alpha(int j, const Vector& alpha);

  /// Queries outside `domain` are counted in extrapolation_count().
  void set_domain(const Box& domain) { domain_ = domain; }
  std::size_t extrapolation_count() const { return extrapolations_->load(); }

 private:
  struct Output {
    KernelSpec kernel;
    Eigen::LLT<Matrix> llt;
    Vector alpha;
    double jitter = 0.0;
    double target_energy = 0.0;
  };

  GPPosterior() = default;
  Vector cross_covariance(int j, const Vector& x) const;
  void note_query(const Vector& x) const;

  TrainingSet data_;
  std::vector<Output> outputs_;
  std::optional<Box> domain_;
  std::shared_ptr<std::atomic<std::size_t>> extrapolations_ =
      std::make_shared<std::atomic<std::size_t>>(0);
};

// ---------------------------------------------------------------------------
// Hyperparameters

struct HyperparameterOptions {
  int restarts = 8;
  bool fit_noise = false;
  int max_iterations = 200;
  double gradient_tolerance = 1e-6;
  // Box on the log-parameters.
  double min_log_signal_variance = std::log(1e-6);
  double max_log_signal_variance = std::log(1e8);
  double min_log_length_scale = std::log(1e-3);
  double max_log_length_scale = std::log(1e8);
  double min_log_noise_std = std::log(1e-6);
  double max_log_noise_std = std::log(10.0);
};

struct HyperparameterFit {
  std::vector<KernelSpec> kernels;
  double noise_std = 0.0;
  double log_marginal_likelihood = 0.0;
  // Summed log marginal likelihood at each restart's starting point.
  std::vector<double> start_log_likelihoods;
  std::vector<double> restart_log_likelihoods;
  int converged_restarts = 0;
};

class HyperparameterFitError : public std::runtime_error {
 public:
  HyperparameterFitError(const std::string& what, HyperparameterFit best)
      : std::runtime_error(what), best_(std::move(best)) {}
  const HyperparameterFit& best_so_far() const { return best_; }

 private:
  HyperparameterFit best_;
};

/// log p(y_j | X, theta). When `grad` is given it receives the gradient with
/// respect to (log signal_variance, log l_1..l_n, log noise_std).
/// Returns -inf when the Gram matrix cannot be factorized.
double log_marginal_likelihood(const TrainingSet& data, int output,
                               const KernelSpec& kernel, double noise_std,
                               Vector* grad = nullptr);

/// Quasi-Newton (BFGS) maximization of the log marginal likelihood over
/// log-parameters, one start at `init` plus `restarts - 1` seeded
/// perturbations. Requires at least two samples.
HyperparameterFit fit_hyperparameters(const TrainingSet& data,
                                      const std::vector<KernelSpec>& init,
                                      std::uint64_t seed,
                                      const HyperparameterOptions& options = {});

// ---------------------------------------------------------------------------
// State-space-wide standard deviation bound

enum class StdBoundMode {
  // grid max plus the prior Lipschitz margin s |h|_L of the std
  kLipschitzGrid,
  // grid max plus posterior-gradient and curvature margin (default)
  kTaylorGrid,
  // best-first cell subdivision with the taylor-grid enclosure
  kBranchAndBound,
};

std::string to_string(StdBoundMode mode);
StdBoundMode std_bound_mode_from_string(const std::string& name);

struct StdBound {
  Vector max_std;       // rho_bar_j, sound upper bound over the box
  Vector grid_max_std;  // largest std actually observed on the grid
  int grid_per_dim = 0;
  StdBoundMode mode = StdBoundMode::kTaylorGrid;
  Vector std_margin;  // largest additive margin applied per output

  double max() const { return max_std.maxCoeff(); }
};

/// Upper bound on max_{x in domain} rho_j(x) from a grid of `grid_per_dim`
/// nodes per dimension plus a rigorous margin covering the gaps.
StdBound max_std_bound(const GPPosterior& gp, const Box& domain,
                       int grid_per_dim,
                       StdBoundMode mode = StdBoundMode::kTaylorGrid);

}  // namespace gpcbf
