#pragma once

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

enum class RobustnessMode { kWorstCaseVertices, kFixedD };

std::string to_string(RobustnessMode m);
RobustnessMode robustness_mode_from_string(const std::string& s);

/// Raised when no input satisfies the decrease condition. values(k, v) is
/// the condition value for input k and error vertex v (one column in
/// fixed-d mode).
class NoSafeInputError : public std::runtime_error {
 public:
  NoSafeInputError(Vector state, Matrix values);
  const Vector& state() const { return state_; }
  const Matrix& values() const { return values_; }

 private:
  Vector state_;
  Matrix values_;
};

/// u(x) = first u in the declared order of U with
///   dB/dx(x) (mu(x) + d + g(x) u) <= 0
/// for every vertex d of D (worst-case mode) or for one fixed d.
class SafeController {
 public:
  SafeController(BarrierCandidate barrier, std::shared_ptr<const DriftModel> drift,
                 std::function<Matrix(const Vector&)> input_map,
                 std::vector<Vector> inputs, ConfidenceBox error_box,
                 RobustnessMode mode = RobustnessMode::kWorstCaseVertices,
                 std::optional<Vector> fixed_d = std::nullopt);

  /// Index into inputs(); throws NoSafeInputError.
  int select_index(const Vector& x) const;
  Vector select_input(const Vector& x) const { return inputs_[select_index(x)]; }

  /// Condition values for every input (rows) and every active d (columns).
  Matrix condition_values(const Vector& x) const;

  const BarrierCandidate& barrier() const { return barrier_; }
  const std::vector<Vector>& inputs() const { return inputs_; }
  RobustnessMode mode() const { return mode_; }
  const std::vector<Vector>& disturbances() const { return disturbances_; }

 private:
  BarrierCandidate barrier_;
  std::shared_ptr<const DriftModel> drift_;
  std::function<Matrix(const Vector&)> input_map_;
  std::vector<Vector> inputs_;
  ConfidenceBox error_box_;
  RobustnessMode mode_;
  std::vector<Vector> disturbances_;
};

/// The learned plant x' = mu(x) + g(x) u.
ControlAffineSystem mean_plant(std::shared_ptr<const DriftModel> drift,
                               const ControlAffineSystem& sys);

struct Trajectory {
  std::vector<double> times;
  std::vector<Vector> states;
  std::vector<Vector> inputs;  // held on [t_k, t_{k+1})
  std::vector<double> barrier_values;
  std::vector<bool> safe;      // state outside X1
  bool exited_state_box = false;

  std::size_t size() const { return times.size(); }
};

/// Fixed-step RK4 with the input recomputed at every step and held over it.
/// Stops early, with exited_state_box set, at the first state outside X.
/// Throws std::invalid_argument unless x0 lies in X0 (or only in X when
/// require_initial is false); NoSafeInputError propagates.
Trajectory simulate_closed_loop(const SafeController& ctrl,
                                const ControlAffineSystem& plant,
                                const ProblemSpec& spec, const Vector& x0,
                                double horizon, double step,
                                bool require_initial = true);

struct BatchRun {
  std::optional<Trajectory> trajectory;
  std::optional<Vector> failure_state;  // set on a no-safe-input event
  std::string error;
};

/// Independent trajectories, simulated in parallel; results in input order.
std::vector<BatchRun> simulate_batch(const SafeController& ctrl,
                                     const ControlAffineSystem& plant,
                                     const ProblemSpec& spec,
                                     const std::vector<Vector>& initial_states,
                                     double horizon, double step,
                                     int threads = 0);

struct SafetyReport {
  std::size_t violations = 0;
  std::optional<std::size_t> first_violation_step;
  std::optional<double> first_violation_time;

  bool safe() const { return violations == 0; }
};

SafetyReport check_trajectory_safety(const Trajectory& traj,
                                     const ProblemSpec& spec);

struct MonotonicityReport {
  double max_increase = 0.0;  // max_k B(t_{k+1}) - B(t_k), floored at 0
  std::size_t violations = 0; // steps with increase > tolerance
  std::optional<std::size_t> worst_step;

  bool holds() const { return violations == 0; }
};

/// Uses the recorded barrier values when present, otherwise re-evaluates.
MonotonicityReport barrier_monotonicity_check(const Trajectory& traj,
                                              const BarrierCandidate& barrier,
                                              double tolerance);

}  // namespace gpcbf
