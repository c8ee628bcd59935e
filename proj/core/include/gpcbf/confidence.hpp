#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gpcbf/dynamics.hpp"
#include "gpcbf/gp.hpp"

namespace gpcbf {

/// Inputs of the uniform GP error bound
///   beta_j = sqrt(2 ||f_j||_k^2 + 300 gamma_j ln^3((N + 1) / epsilon)).
struct ErrorBoundParams {
  double epsilon = 0.05;
  Vector rkhs_norm_bounds;  // upper bounds on ||f_j||_{k_j}
  Vector info_gains;        // gamma_j
  int sample_count = 0;     // N

  void validate() const;
};

double beta_bound(const ErrorBoundParams& params, int j);
Vector beta_bounds(const ErrorBoundParams& params);

/// Greedy approximation of the maximal information gain
///   max_{|A| <= budget} 1/2 log det(I + noise^-2 K_A)
/// over `candidates` (one state per row). Each step takes the candidate with
/// the largest posterior variance; ties go to the lowest row index.
double information_gain_greedy(const KernelSpec& kernel,
                               const Matrix& candidates, int budget,
                               double noise_std);

/// Hyperrectangle D of model errors, half_widths[j] = beta_j * rho_bar_j.
struct ConfidenceBox {
  enum class Provenance { kAnalytic, kMonteCarloValidated };

  Vector half_widths;
  Provenance provenance = Provenance::kAnalytic;
  // (1 - epsilon)^n when the analytic route produced the box.
  std::optional<double> probability_lower_bound;

  int dim() const { return static_cast<int>(half_widths.size()); }
  /// All 2^n corners, first coordinate varying fastest, minus side first.
  std::vector<Vector> vertices() const;
  bool contains(const Vector& d, double tol = 0.0) const;
};

std::string to_string(ConfidenceBox::Provenance p);

ConfidenceBox build_confidence_box(const Vector& beta, const StdBound& bound,
                                   std::optional<double> epsilon = std::nullopt);

/// Box with equal half-width in every dimension (the fixed-error-bound route).
ConfidenceBox uniform_confidence_box(int n, double half_width);

struct BinomialInterval {
  double lower = 0.0;
  double upper = 1.0;
};

/// Exact two-sided Clopper-Pearson interval at the given confidence level.
BinomialInterval clopper_pearson(std::uint64_t successes, std::uint64_t trials,
                                 double confidence);

struct ContainmentEstimate {
  std::uint64_t trials = 0;
  std::uint64_t successes = 0;
  double lower_bound = 0.0;
  double upper_bound = 1.0;
  double confidence = 0.0;
  std::uint64_t seed = 0;
  int grid_per_dim = 0;
  // How one trial is defined; recorded in run manifests.
  std::string trial_semantics = "uniform-state-sample";

  double fraction() const {
    return trials ? static_cast<double>(successes) / trials : 0.0;
  }
};

/// Number of independent random streams a Monte-Carlo run is split into.
/// Fixed so results do not depend on the worker count.
inline constexpr int kMonteCarloShards = 64;

/// Worker threads used by data-parallel stages: GPCBF_THREADS if set,
/// otherwise the hardware concurrency.
int default_thread_count();

/// Each trial draws one state uniformly from the state box (or uniformly
/// from the grid nodes when grid_per_dim > 0) and succeeds when
/// |f_j(x) - mu_j(x)| <= half_widths[j] for every j.
ContainmentEstimate monte_carlo_containment(
    const GPPosterior& gp, const ControlAffineSystem& truth,
    const ProblemSpec& spec, const ConfidenceBox& box, std::uint64_t trials,
    int grid_per_dim, double confidence, std::uint64_t seed,
    int threads = 0);

}  // namespace gpcbf
