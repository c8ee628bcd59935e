#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace gpcbf {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Axis-aligned box [lower, upper] in R^n.
struct Box {
  Vector lower;
  Vector upper;

  Box() = default;
  Box(Vector lo, Vector hi);

  int dim() const { return static_cast<int>(lower.size()); }
  bool contains(const Vector& x, double tol = 0.0) const;
  bool contains(const Box& other) const;
  bool intersects(const Box& other) const;
  Vector center() const { return 0.5 * (lower + upper); }
  Vector widths() const { return upper - lower; }
};

bool contained_in_any(const std::vector<Box>& boxes, const Vector& x);

/// A safety problem: state box X, initial set X0, unsafe set X1 and the
/// finite input set U. X0 and X1 are finite unions of boxes.
struct ProblemSpec {
  int n = 0;
  int m = 0;
  Box state_box;
  std::vector<Box> initial_boxes;
  std::vector<Box> unsafe_boxes;
  std::vector<Vector> inputs;

  /// Throws std::invalid_argument naming the first broken invariant.
  void validate() const;

  bool in_state_box(const Vector& x) const { return state_box.contains(x); }
  bool in_initial_set(const Vector& x) const {
    return contained_in_any(initial_boxes, x);
  }
  bool in_unsafe_set(const Vector& x) const {
    return contained_in_any(unsafe_boxes, x);
  }
};

/// x' = f(x) + g(x) u. The drift is an oracle that the learning pipeline
/// never reads directly; only data generation and validation do.
struct ControlAffineSystem {
  int n = 0;
  int m = 0;
  std::function<Vector(const Vector&)> drift;
  std::function<Matrix(const Vector&)> input_map;
  // Bound on |dg_ik/dx_d| over the state box; 0 for constant g.
  double input_map_lipschitz = 0.0;

  bool has_drift() const { return static_cast<bool>(drift); }
  Vector vector_field(const Vector& x, const Vector& u) const;
};

/// One classical RK4 step of x' = rhs(x) with step h.
Vector rk4_step(const std::function<Vector(const Vector&)>& rhs,
                const Vector& x, double h);

/// Noisy drift measurements y = f(x) + w, w ~ N(0, noise_std^2 I).
struct TrainingSet {
  Matrix states;   // N x n
  Matrix targets;  // N x n
  double noise_std = 0.0;
  std::uint64_t seed = 0;

  int size() const { return static_cast<int>(states.rows()); }
  int dim() const { return static_cast<int>(states.cols()); }
  Vector state(int i) const { return states.row(i).transpose(); }
  /// First `count` samples, same noise and seed.
  TrainingSet prefix(int count) const;
};

/// Moore-Greitzer jet engine in no-stall mode:
/// f1 = -x2 - 1.5 x1^2 - 0.5 x1^3, f2 = x1, g = (0, -1)^T.
ControlAffineSystem jet_engine_system();

/// X = [-1,3]x[-4,4], X0 = [0,1]x[-1,1],
/// X1 = [-1,0]x[-4,-2.5] u [-1,3]x[2,4], U = {-2,-1.5,...,2}.
ProblemSpec jet_engine_problem();

/// Draws N states i.i.d. uniform over the state box and measures the drift
/// there. With `finite_difference_step` set, targets come from
/// finite_difference_measurement instead of the oracle; noise is added either
/// way. Pure function of its arguments.
TrainingSet generate_training_data(
    const ControlAffineSystem& sys, const ProblemSpec& spec, int count,
    double noise_std, std::uint64_t seed,
    std::optional<double> finite_difference_step = std::nullopt);

/// (phi(x, 0, h) - x) / h where phi integrates the uncontrolled system.
Vector finite_difference_measurement(const ControlAffineSystem& sys,
                                     const Vector& x, double h);

}  // namespace gpcbf
